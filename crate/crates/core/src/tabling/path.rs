use std::collections::{BTreeSet, VecDeque};
use std::thread;

use parking_lot::Mutex;

use super::{AnswerTable, Graph, TableSpace};

/// Evaluates `path(s, T)` for every `s` in `sources` on `threads` workers
/// and returns all `(s, t)` answers.
///
/// `path(s, t)` holds iff there is an edge `s -> t` or an edge `s -> m` with
/// `path(m, t)`; `(s, s)` appears only when `s` lies on a cycle. Workers take
/// sources from a shared pool behind a mutex. Each source is evaluated to
/// its own fixed point, reusing the answers of any subgoal already complete.
pub fn tabled_path(
    graph: &Graph,
    sources: &[u32],
    threads: usize,
    ts: &TableSpace<u32, u32>,
) -> BTreeSet<(u32, u32)> {
    let pool = Mutex::new(sources.iter().copied().collect::<VecDeque<u32>>());
    thread::scope(|s| {
        for _ in 0..threads.max(1) {
            s.spawn(|| loop {
                let Some(source) = pool.lock().pop_front() else { break };
                let (table, created) = ts.get_or_create_subgoal(source);
                if created {
                    evaluate(graph, source, table, ts);
                }
            });
        }
    });
    let mut out = BTreeSet::new();
    for &s in sources {
        let table = ts.subgoal(&s).expect("every source was tabled");
        out.extend(table.answers().map(|&t| (s, t)));
    }
    out
}

fn evaluate(graph: &Graph, source: u32, table: &AnswerTable<u32>, ts: &TableSpace<u32, u32>) {
    let mut frontier: Vec<u32> = Vec::new();
    let reach = |t: u32, frontier: &mut Vec<u32>| {
        if table.add_answer(t) {
            frontier.push(t);
        }
    };
    for &t in graph.successors(source) {
        reach(t, &mut frontier);
    }
    while let Some(m) = frontier.pop() {
        match ts.subgoal(&m).filter(|t| t.is_complete()) {
            // path(m, _) is final: its answers are exactly what expanding m
            // would produce.
            Some(done) => {
                for &t in done.answers() {
                    reach(t, &mut frontier);
                }
            }
            None => {
                for &t in graph.successors(m) {
                    reach(t, &mut frontier);
                }
            }
        }
    }
    table.mark_complete();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn run(g: &Graph, sources: &[u32], threads: usize) -> BTreeSet<(u32, u32)> {
        let ts = TableSpace::new(Config::default()).unwrap();
        let out = tabled_path(g, sources, threads, &ts);
        for s in sources {
            assert!(ts.subgoal(s).unwrap().is_complete());
        }
        out
    }

    #[test]
    fn single_edge() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(run(&g, &[0], 1), BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn two_cycle_reports_self_pairs() {
        let g = Graph::new(2, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(
            run(&g, &[0, 1], 2),
            BTreeSet::from([(0, 0), (0, 1), (1, 0), (1, 1)])
        );
    }

    #[test]
    fn duplicate_sources_evaluated_once() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(run(&g, &[0, 0, 1], 3), BTreeSet::from([(0, 1), (0, 2), (1, 2)]));
    }
}
