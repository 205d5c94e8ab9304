use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tensera_bench::{axioms, corpus, identity_cut};
use tensera_core::path_engine::{build_grammar, cyk_membership, parse_axioms, parse_diamonds};
use tensera_core::transform::{eliminate_cuts, translate_dkt_to_skt};
use tensera_core::{find_countermodel, prove_dkt, prove_extension, DeepSystem, FrameFilter, Sequent};

fn prover(c: &mut Criterion) {
    let mut g = c.benchmark_group("prove");
    for (i, f) in axioms().into_iter().enumerate() {
        let s = Sequent::from_formulas([f]);
        g.bench_with_input(BenchmarkId::new("dkt_axiom", i + 1), &s, |b, s| {
            b.iter(|| prove_dkt(black_box(s)))
        });
    }
    let sample = corpus(50, 7);
    g.bench_function("dkt_corpus_50", |b| {
        b.iter(|| sample.iter().filter(|s| prove_dkt(s).is_proved()).count())
    });
    let ds4 = DeepSystem::ds4();
    let path = DeepSystem::path(parse_axioms("->w, ww->w").unwrap());
    let small = corpus(30, 5);
    for (name, sys) in [("ds4_corpus_30", &ds4), ("path_s4_corpus_30", &path)] {
        g.bench_function(name, |b| {
            b.iter(|| {
                for s in &small {
                    black_box(prove_extension(s, sys, 3));
                }
            })
        });
    }
    g.finish();
}

fn transforms(c: &mut Criterion) {
    let proofs: Vec<_> = corpus(50, 7)
        .iter()
        .filter_map(|s| prove_dkt(s).proof().cloned())
        .collect();
    c.bench_function("translate_d2s", |b| {
        b.iter(|| {
            for d in &proofs {
                black_box(translate_dkt_to_skt(d).unwrap());
            }
        })
    });
    let mut g = c.benchmark_group("cut_elimination");
    for f in ["a & b", "[](a | <>b)", "<>[*]a & (b | ~c)"] {
        let d = identity_cut(f);
        g.bench_with_input(BenchmarkId::from_parameter(f), &d, |b, d| {
            b.iter(|| eliminate_cuts(d, &[]).unwrap())
        });
    }
    g.finish();
}

fn oracles(c: &mut Criterion) {
    let grammar = build_grammar(&parse_axioms("bw->w").unwrap(), tensera_core::Diamond::White);
    let word = parse_diamonds("bbwbwbbw").unwrap();
    c.bench_function("cyk_len8", |b| b.iter(|| cyk_membership(&grammar, black_box(&word))));
    let f = tensera_core::parse("<><>a -> <>a").unwrap();
    c.bench_function("countermodel_3", |b| {
        b.iter(|| find_countermodel(&f, 3, FrameFilter::ReflTrans))
    });
}

criterion_group!(benches, prover, transforms, oracles);
criterion_main!(benches);
