use serde::{Deserialize, Serialize};

/// Side of a rectangular mid-surface `omega = (0, lx) x (0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    /// `x1 = 0`
    Left,
    /// `x1 = lx`
    Right,
    /// `x2 = 0`
    Bottom,
    /// `x2 = ly`
    Top,
}

impl std::str::FromStr for Edge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Edge::Left),
            "right" => Ok(Edge::Right),
            "bottom" => Ok(Edge::Bottom),
            "top" => Ok(Edge::Top),
            other => Err(format!("unknown edge '{other}' (expected left, right, bottom or top)")),
        }
    }
}

/// Clamped portion of the lateral boundary, a union of whole edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeSet(Vec<Edge>);

impl EdgeSet {
    pub fn new(edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut v: Vec<Edge> = edges.into_iter().collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.0.contains(&e)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.0
    }

    /// Whether node `(i, j)` of an `nx x ny` cell grid lies on a clamped edge.
    pub fn holds(&self, i: usize, j: usize, nx: usize, ny: usize) -> bool {
        (i == 0 && self.contains(Edge::Left))
            || (i == nx && self.contains(Edge::Right))
            || (j == 0 && self.contains(Edge::Bottom))
            || (j == ny && self.contains(Edge::Top))
    }
}
