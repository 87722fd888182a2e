//! Named views over parameter (or gradient) tensors.
//!
//! The optimizer and the snapshot writer both walk a model's tensors in a
//! fixed order; these light structs carry the data slice plus a name used in
//! error messages and the snapshot manifest.

pub struct BlockRef<'a, T> {
    pub name: String,
    pub data: &'a [T],
}

pub struct BlockMut<'a, T> {
    pub name: String,
    pub data: &'a mut [T],
}

impl<'a, T> BlockRef<'a, T> {
    pub fn new(name: impl Into<String>, data: &'a [T]) -> Self {
        BlockRef {
            name: name.into(),
            data,
        }
    }
}

impl<'a, T> BlockMut<'a, T> {
    pub fn new(name: impl Into<String>, data: &'a mut [T]) -> Self {
        BlockMut {
            name: name.into(),
            data,
        }
    }
}
