//! Minimal key/value tree document format used by the machine-readable CLI
//! outputs and the trace export. Leaves are `key: value` lines; branches are
//! `key:` lines with children indented by two spaces. Repeated keys express
//! lists.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub key: String,
    pub value: Option<String>,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(key: impl Into<String>, value: impl Into<String>) -> TreeNode {
        TreeNode {
            key: key.into(),
            value: Some(value.into()),
            children: Vec::new(),
        }
    }

    pub fn branch(key: impl Into<String>, children: Vec<TreeNode>) -> TreeNode {
        TreeNode {
            key: key.into(),
            value: None,
            children,
        }
    }
}

pub fn emit(nodes: &[TreeNode]) -> String {
    let mut out = String::new();
    for n in nodes {
        emit_node(n, 0, &mut out);
    }
    out
}

fn emit_node(n: &TreeNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(&n.key);
    out.push(':');
    if let Some(v) = &n.value {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    for c in &n.children {
        emit_node(c, depth + 1, out);
    }
}

pub fn parse(text: &str) -> Result<Vec<TreeNode>, String> {
    let mut roots: Vec<TreeNode> = Vec::new();
    // index path to the most recently inserted node
    let mut path: Vec<usize> = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return Err(format!("line {}: odd indentation", ix + 1));
        }
        let depth = indent / 2;
        let line = raw.trim_start();
        let (key, value) = match line.split_once(':') {
            Some((k, rest)) => {
                let v = rest.trim();
                (k.to_string(), (!v.is_empty()).then(|| v.to_string()))
            }
            None => return Err(format!("line {}: missing ':'", ix + 1)),
        };
        let node = TreeNode {
            key,
            value,
            children: Vec::new(),
        };
        if depth > path.len() {
            return Err(format!("line {}: indentation jumps levels", ix + 1));
        }
        path.truncate(depth);
        if depth == 0 {
            roots.push(node);
            path = vec![roots.len() - 1];
        } else {
            let mut slot = &mut roots[path[0]];
            for &p in &path[1..] {
                slot = &mut slot.children[p];
            }
            slot.children.push(node);
            path.push(slot.children.len() - 1);
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let doc = vec![
            TreeNode::branch(
                "run",
                vec![
                    TreeNode::leaf("steps", "4"),
                    TreeNode::leaf("halted", "true"),
                    TreeNode::branch(
                        "term",
                        vec![TreeNode::leaf("state", "qf"), TreeNode::leaf("head", "0")],
                    ),
                    TreeNode::branch(
                        "term",
                        vec![TreeNode::leaf("state", "qf"), TreeNode::leaf("head", "1")],
                    ),
                ],
            ),
            TreeNode::leaf("ok", "yes"),
        ];
        let text = emit(&doc);
        let back = parse(&text).unwrap();
        assert_eq!(doc, back);
        assert_eq!(text, emit(&back));
    }

    #[test]
    fn rejects_bad_indent() {
        assert!(parse("a:\n   b: 1\n").is_err());
        assert!(parse("  a: 1\n").is_err());
    }
}
