use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The five property nodes of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Category,
    Material,
    Elasticity,
    Density,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Categorical,
    Continuous,
}

/// Undirected tree edges, in canonical traversal order.
pub const TREE_EDGES: [(Node, Node); 4] = [
    (Node::Category, Node::Material),
    (Node::Category, Node::Volume),
    (Node::Material, Node::Density),
    (Node::Material, Node::Elasticity),
];

impl Node {
    pub const ALL: [Node; 5] = [
        Node::Category,
        Node::Material,
        Node::Elasticity,
        Node::Density,
        Node::Volume,
    ];

    pub const CONTINUOUS: [Node; 3] = [Node::Elasticity, Node::Density, Node::Volume];

    pub fn kind(self) -> NodeKind {
        match self {
            Node::Category | Node::Material => NodeKind::Categorical,
            _ => NodeKind::Continuous,
        }
    }

    pub fn is_categorical(self) -> bool {
        self.kind() == NodeKind::Categorical
    }

    /// The categorical node whose labels index this node's mixture components.
    /// Categorical nodes are their own label space.
    pub fn label_space(self) -> Node {
        match self {
            Node::Volume => Node::Category,
            Node::Density | Node::Elasticity => Node::Material,
            n => n,
        }
    }

    pub fn neighbors(self) -> &'static [Node] {
        match self {
            Node::Category => &[Node::Material, Node::Volume],
            Node::Material => &[Node::Category, Node::Density, Node::Elasticity],
            Node::Volume => &[Node::Category],
            Node::Density | Node::Elasticity => &[Node::Material],
        }
    }

    pub fn is_adjacent(self, other: Node) -> bool {
        self.neighbors().contains(&other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Node::Category => "category",
            Node::Material => "material",
            Node::Elasticity => "elasticity",
            Node::Density => "density",
            Node::Volume => "volume",
        }
    }

    /// Unit suffix used in file keys.
    pub fn unit_suffix(self) -> Option<&'static str> {
        match self {
            Node::Elasticity => Some("kpa"),
            Node::Density => Some("kg_m3"),
            Node::Volume => Some("cm3"),
            _ => None,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Node::Elasticity => "kPa",
            Node::Density => "kg/m^3",
            Node::Volume => "cm^3",
            _ => "",
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Node::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::validation("node", format!("unknown node {s:?}")))
    }
}
