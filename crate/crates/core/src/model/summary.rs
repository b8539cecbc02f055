use std::fmt;

use serde::{Deserialize, Serialize};

use crate::nn::Shape;

/// One row of an architecture summary: output shape (batch omitted), stored
/// scalar count and input layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRow {
    pub name: String,
    pub output: [usize; 3],
    pub params: usize,
    pub connected_to: Vec<String>,
}

impl LayerRow {
    pub(crate) fn new(name: &str, shape: Shape, params: usize, connected_to: &[&str]) -> Self {
        LayerRow {
            name: name.to_string(),
            output: [shape.h, shape.w, shape.c],
            params,
            connected_to: connected_to.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn shape(&self) -> Shape {
        Shape::new(1, self.output[0], self.output[1], self.output[2])
    }
}

impl fmt::Display for LayerRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [h, w, c] = self.output;
        write!(
            f,
            "{:<24} (None, {h}, {w}, {c}){:>14}  {}",
            self.name,
            self.params,
            self.connected_to.join(" ")
        )
    }
}
