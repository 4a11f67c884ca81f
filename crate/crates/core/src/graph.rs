//! Strongly connected components over string-labelled graphs.

use std::collections::BTreeMap;

/// Tarjan's algorithm. Components are returned in reverse topological
/// order (a component comes before every component that can reach it);
/// nodes inside a component are sorted by name. `succ` must only return
/// members of `nodes`.
pub fn sccs<F>(nodes: &[String], succ: F) -> Vec<Vec<String>>
where
    F: Fn(&str) -> Vec<String>,
{
    struct St<'a, F> {
        succ: &'a F,
        index: BTreeMap<String, usize>,
        low: BTreeMap<String, usize>,
        on_stack: BTreeMap<String, bool>,
        stack: Vec<String>,
        next: usize,
        out: Vec<Vec<String>>,
    }

    fn visit<F: Fn(&str) -> Vec<String>>(st: &mut St<F>, v: &str) {
        st.index.insert(v.to_string(), st.next);
        st.low.insert(v.to_string(), st.next);
        st.next += 1;
        st.stack.push(v.to_string());
        st.on_stack.insert(v.to_string(), true);
        let mut ws = (st.succ)(v);
        ws.sort();
        for w in ws {
            if !st.index.contains_key(&w) {
                visit(st, &w);
                let lw = st.low[&w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if st.on_stack.get(&w).copied().unwrap_or(false) {
                let iw = st.index[&w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack.insert(w.clone(), false);
                let done = w == v;
                comp.push(w);
                if done {
                    break;
                }
            }
            comp.sort();
            st.out.push(comp);
        }
    }

    let mut st = St {
        succ: &succ,
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on_stack: BTreeMap::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    let mut sorted = nodes.to_vec();
    sorted.sort();
    for n in &sorted {
        if !st.index.contains_key(n) {
            visit(&mut st, n);
        }
    }
    st.out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph<'a>(edges: &'a [(&'a str, &'a str)]) -> impl Fn(&str) -> Vec<String> + 'a {
        move |v| edges.iter().filter(|(a, _)| *a == v).map(|(_, b)| b.to_string()).collect()
    }

    #[test]
    fn callees_first() {
        let nodes: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let edges = [("a", "b"), ("b", "c"), ("c", "b"), ("c", "d")];
        let out = sccs(&nodes, graph(&edges));
        assert_eq!(out, vec![vec!["d".to_string()], vec!["b".into(), "c".into()], vec!["a".into()]]);
    }
}
