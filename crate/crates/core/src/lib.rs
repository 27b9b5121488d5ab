pub mod coloring;
pub mod document;
pub mod graph;
pub mod minor;
pub mod pipeline;
pub mod planarity;
pub mod gadgets;
pub mod realizer;
pub mod trace;
