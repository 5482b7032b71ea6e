use std::path::Path;

use rerank_core::distill::CandidatePool;

use super::{create, finish, open, read_jsonl, write_jsonl};
use crate::Result;

/// One mined pool per JSON line, in query order.
pub fn load_pools(path: impl AsRef<Path>) -> Result<Vec<CandidatePool>> {
    let path = path.as_ref();
    read_jsonl(open(path)?, path)
}

pub fn save_pools(path: impl AsRef<Path>, pools: &[CandidatePool]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_jsonl(&mut w, pools, path)?;
    finish(path, w)
}
