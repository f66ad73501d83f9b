//! Graph validation and stage layering on a small diamond.

use std::collections::BTreeSet;

use sai_core::planner::{execution_stages, topological_order, validate_graph, TaskGraph, TaskNode};

fn main() {
    let graph = TaskGraph::new(
        "diamond",
        vec![
            TaskNode::new("sense", "probe"),
            TaskNode::new("plan_a", "allocate").after(&["sense"]),
            TaskNode::new("plan_b", "allocate").after(&["sense"]),
            TaskNode::new("steer", "route").after(&["plan_a", "plan_b"]),
        ],
    );
    println!("shape: {:?}", graph.shape);
    println!("order: {:?}", topological_order(&graph).unwrap());
    for (i, stage) in execution_stages(&graph).unwrap().iter().enumerate() {
        println!("stage {i}: {stage:?}");
    }

    let vocabulary: BTreeSet<String> = ["probe", "allocate"].map(String::from).into();
    let report = validate_graph(&graph, &vocabulary);
    println!("valid against a vocabulary without `route`: {}", report.is_valid());
    for finding in &report.findings {
        println!("  {} {:?}", finding.code(), finding.task_key());
    }
}
