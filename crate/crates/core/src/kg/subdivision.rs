use std::collections::HashMap;

use super::KnowledgeGraph;
use crate::Kind;

/// Dense index of a node in a [`SubdivisionGraph`].
pub type NodeId = u32;

/// Undirected graph in which every predicate of the knowledge graph is a
/// node of its own. All occurrences of a predicate share one node, so a
/// relation candidate (a predicate URI) maps to exactly one node.
#[derive(Debug, Clone)]
pub struct SubdivisionGraph {
    names: Vec<String>,
    kinds: Vec<Kind>,
    entities: HashMap<String, NodeId>,
    relations: HashMap<String, NodeId>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl SubdivisionGraph {
    pub fn build(kg: &KnowledgeGraph) -> Self {
        let vertex_count = kg.vertex_count();
        let mut names: Vec<String> = kg.vertex_names().to_vec();
        let mut kinds = vec![Kind::Entity; vertex_count];
        names.extend(kg.label_names().iter().cloned());
        kinds.extend(std::iter::repeat_n(Kind::Relation, kg.label_count()));

        let entities = kg
            .vertex_names()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as NodeId))
            .collect();
        let relations = kg
            .label_names()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), (vertex_count + i) as NodeId))
            .collect();

        let mut adjacency: Vec<Vec<NodeId>> = vec![Vec::new(); names.len()];
        for &(s, p, o) in kg.raw_triples() {
            let w = vertex_count as NodeId + p;
            for v in [s, o] {
                adjacency[v as usize].push(w);
                adjacency[w as usize].push(v);
            }
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }

        SubdivisionGraph {
            names,
            kinds,
            entities,
            relations,
            adjacency,
            edge_count: edge_count / 2,
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    /// Number of distinct undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Looks up the node for an identifier of a given kind.
    pub fn node(&self, kind: Kind, name: &str) -> Option<NodeId> {
        match kind {
            Kind::Entity => self.entities.get(name).copied(),
            Kind::Relation => self.relations.get(name).copied(),
        }
    }

    /// Looks up an identifier, preferring the entity node when the same
    /// string is used both as a vertex and as a predicate.
    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.node(Kind::Entity, name)
            .or_else(|| self.node(Kind::Relation, name))
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id as usize]
    }

    pub fn kind(&self, id: NodeId) -> Kind {
        self.kinds[id as usize]
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id as usize]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id as usize].len()
    }

    pub(crate) fn contains(&self, id: NodeId) -> bool {
        (id as usize) < self.names.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(triples: &[(&str, &str, &str)]) -> SubdivisionGraph {
        SubdivisionGraph::build(&KnowledgeGraph::from_triples(triples.iter().copied()).unwrap())
    }

    fn neighbor_names(g: &SubdivisionGraph, id: NodeId) -> Vec<&str> {
        let mut v: Vec<&str> = g.neighbors(id).iter().map(|&n| g.name(n)).collect();
        v.sort();
        v
    }

    #[test]
    fn single_triple_becomes_path_through_relation_node() {
        let g = graph(&[("A", "p", "B")]);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let w = g.node(Kind::Relation, "p").unwrap();
        assert_eq!(g.kind(w), Kind::Relation);
        assert_eq!(neighbor_names(&g, w), vec!["A", "B"]);
        let a = g.node(Kind::Entity, "A").unwrap();
        assert_eq!(neighbor_names(&g, a), vec!["p"]);
    }

    #[test]
    fn shared_predicate_is_one_node() {
        let g = graph(&[("A", "p", "B"), ("C", "p", "D")]);
        let w = g.node(Kind::Relation, "p").unwrap();
        assert_eq!(g.degree(w), 4);
        assert_eq!(g.node_count(), 5);
    }

    #[test]
    fn parallel_predicates_get_separate_nodes() {
        let g = graph(&[("A", "p", "B"), ("A", "q", "B")]);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn identifier_used_as_vertex_and_predicate() {
        let g = graph(&[("type", "type", "Class")]);
        let e = g.node(Kind::Entity, "type").unwrap();
        let r = g.node(Kind::Relation, "type").unwrap();
        assert_ne!(e, r);
        assert_eq!(g.lookup("type"), Some(e));
    }

    #[test]
    fn direction_is_ignored() {
        let g = graph(&[("A", "p", "B")]);
        let a = g.node(Kind::Entity, "A").unwrap();
        let b = g.node(Kind::Entity, "B").unwrap();
        assert_eq!(g.degree(a), g.degree(b));
    }
}
