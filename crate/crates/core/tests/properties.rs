use std::collections::BTreeMap;

use proptest::prelude::*;
use xmlbench::codec::{ari, bwt, mtf, rle, Backend, Pipeline, FRAME_HEADER};
use xmlbench::entropy::{estimate_true_entropy, shannon_entropy};
use xmlbench::harness::{build_plan, XorShift64Star};
use xmlbench::metrics::{y_comp_ratio, y_comp_speed, y_eff_old, y_eff_prop};
use xmlbench::report::SizeFilter;
use xmlbench::stats::{anova_partial_f, fit_ols, greedy_groups, tukey_kramer, Matrix};
use xmlbench::transforms::{xmill_compress, xmill_decompress, xmill_split, xmlzip_compress, xmlzip_decompress, xmlzip_split, ContainerSpec};
use xmlbench::xml::gen::{random_document, GenParams};
use xmlbench::xml::{infer_dtd, parse_xml, serialize, validate_against_dtd, XmlContent, XmlDocument, XmlNode};

fn doc_strategy(comments: bool) -> impl Strategy<Value = XmlDocument> {
    (any::<u64>(), 1usize..7, 0usize..5).prop_map(move |(seed, depth, kids)| {
        let params = GenParams {
            max_depth: depth,
            max_children: kids,
            comments,
            ..GenParams::default()
        };
        random_document(seed, &params)
    })
}

fn depth_oracle(node: &XmlNode) -> usize {
    let mut best = 0;
    for c in &node.children {
        if let XmlContent::Element(e) = c {
            best = best.max(depth_oracle(e));
        }
    }
    best + 1
}

fn nodes_at(node: &XmlNode, level: usize, want: usize) -> usize {
    if level == want {
        return 1;
    }
    node.children
        .iter()
        .map(|c| match c {
            XmlContent::Element(e) => nodes_at(e, level + 1, want),
            _ => 0,
        })
        .sum()
}

fn histogram_h1(data: &[u8]) -> f64 {
    let mut counts = BTreeMap::new();
    for b in data {
        *counts.entry(*b).or_insert(0u64) += 1;
    }
    let m = data.len() as f64;
    counts.values().map(|&c| c as f64 / m).map(|p| -p * p.log2()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn xml_serialize_reparse(doc in doc_strategy(true)) {
        let text = serialize(&doc);
        let back = parse_xml(text.as_bytes()).unwrap();
        prop_assert!(back.same_tree(&doc));
    }

    #[test]
    fn strip_comments_idempotent(doc in doc_strategy(true)) {
        let once = doc.strip_comments();
        prop_assert!(!once.has_comments());
        prop_assert!(once.strip_comments().same_tree(&once));
    }

    #[test]
    fn depth_matches_recursion(doc in doc_strategy(true)) {
        prop_assert_eq!(doc.depth(), depth_oracle(&doc.root));
    }

    #[test]
    fn document_validates_against_inferred_dtd(doc in doc_strategy(true)) {
        let reparsed = parse_xml(serialize(&doc).as_bytes()).unwrap();
        prop_assert!(validate_against_dtd(&reparsed, &infer_dtd(&reparsed)).is_ok());
    }

    #[test]
    fn h1_permutation_invariant_and_matches_histogram(mut data in proptest::collection::vec(any::<u8>(), 1..600), seed in any::<u64>()) {
        let h = shannon_entropy(&data, 1).unwrap().bits_per_symbol;
        prop_assert!((h - histogram_h1(&data)).abs() < 1e-9);
        XorShift64Star::new(seed).shuffle(&mut data);
        prop_assert!((shannon_entropy(&data, 1).unwrap().bits_per_symbol - h).abs() < 1e-9);
    }

    #[test]
    fn true_entropy_estimate_never_rises(sizes in proptest::collection::vec(1u64..10_000, 1..20)) {
        let mut prev = f64::INFINITY;
        for k in 1..=sizes.len() {
            let e = estimate_true_entropy(10_000, sizes[..k].iter().copied()).unwrap();
            prop_assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn builtin_stages_roundtrip(data in proptest::collection::vec(any::<u8>(), 0..2000)) {
        prop_assert_eq!(ari::decode(&ari::encode(&data), data.len()).unwrap(), data.clone());
        prop_assert_eq!(bwt::bwt_inverse(&bwt::bwt_forward(&data)).unwrap(), data.clone());
        prop_assert_eq!(mtf::mtf_decode(&mtf::mtf_encode(&data)), data.clone());
        prop_assert_eq!(rle::rle_decode(&rle::rle_encode(&data)).unwrap(), data.clone());
        for p in [Pipeline::ari(), Pipeline::bwt(), Pipeline::store()] {
            prop_assert_eq!(p.decompress(&p.compress(&data).unwrap()).unwrap(), data.clone());
        }
    }

    #[test]
    fn low_alphabet_runs_roundtrip(data in proptest::collection::vec(0u8..3, 0..3000)) {
        prop_assert_eq!(bwt::bwt_inverse(&bwt::bwt_forward(&data)).unwrap(), data.clone());
        prop_assert_eq!(rle::rle_decode(&rle::rle_encode(&data)).unwrap(), data);
    }

    #[test]
    fn xmill_split_keeps_every_value_byte(doc in doc_strategy(false), rules in proptest::sample::subsequence(vec!["//color", "/(*)", "(#)+", "/(item|name)=>r1", "//x", "//car/@id"], 0..3)) {
        let spec = ContainerSpec::parse(&rules).unwrap();
        let parts = xmill_split(&doc, &spec).unwrap();
        let total: usize = parts.containers.iter().map(|c| c.data.len()).sum();
        prop_assert_eq!(total, doc.value_bytes());
        for backend in [Backend::Ari, Backend::Bwt, Backend::Store] {
            let back = xmill_decompress(&xmill_compress(&doc, &spec, backend).unwrap(), backend).unwrap();
            prop_assert!(back.same_tree(&doc));
        }
    }

    #[test]
    fn first_match_routing(path in proptest::collection::vec(proptest::sample::select(vec!["db", "car", "color", "paint", "@k", "item"]), 1..5), extra in proptest::sample::select(vec!["/(*)", "(#)+", "//color"])) {
        let base = ContainerSpec::parse(&["//car/color", "/(paint|item)"]).unwrap();
        let longer = ContainerSpec::parse(&["//car/color", "/(paint|item)", extra]).unwrap();
        let (i, key) = base.route(&path);
        prop_assert!(i < base.rules.len());
        if i + 1 < base.rules.len() {
            prop_assert_eq!(longer.route(&path), (i, key));
        }
    }

    #[test]
    fn xmlzip_fragments_and_roundtrip(doc in doc_strategy(false), depth in 1usize..5) {
        let parts = xmlzip_split(&doc, depth).unwrap();
        prop_assert_eq!(parts.fragments.len(), nodes_at(&doc.root, 1, depth));
        for backend in [Backend::Ari, Backend::Bwt, Backend::Store] {
            let back = xmlzip_decompress(&xmlzip_compress(&doc, depth, backend).unwrap(), backend).unwrap();
            prop_assert!(back.same_tree(&doc));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn metric_monotonicity(n in 1u64..1 << 40, c in 1u64..1 << 40, dc in 1u64..1 << 20, t in 1e-9f64..0.9, k in 1.0001f64..10.0) {
        let m = c.min(n);
        prop_assert!(y_comp_ratio(n, c + dc).unwrap() < y_comp_ratio(n, c).unwrap());
        prop_assert!(y_comp_speed(n, t * k).unwrap() < y_comp_speed(n, t).unwrap());
        prop_assert!(y_eff_prop(n, c + dc, m, t).unwrap() < y_eff_prop(n, c, m, t).unwrap());
        prop_assert!(y_eff_prop(n, c, m, t * k).unwrap() < y_eff_prop(n, c, m, t).unwrap());
        // both efficiency metrics order two runs of one file the same way
        let old_better = y_eff_old(c, m, t).unwrap() < y_eff_old(c + dc, m, t).unwrap();
        let prop_better = y_eff_prop(n, c, m, t).unwrap() > y_eff_prop(n, c + dc, m, t).unwrap();
        prop_assert_eq!(old_better, prop_better);
        // scaling both sizes leaves the ratio metric unchanged
        if n < 1 << 39 && c < 1 << 39 {
            prop_assert!((y_comp_ratio(2 * n, 2 * c).unwrap() - y_comp_ratio(n, c).unwrap()).abs() < 1e-9);
        }
        let best = y_eff_prop(n, m, m, t).unwrap();
        let direct = ((n as f64 / m as f64).powi(2) / t).log10() + 10.0;
        prop_assert!((best - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn size_strata_partition(threshold in 1u64..1 << 30, size in 0u64..1 << 31, op in 0usize..4) {
        let text = format!("{}{threshold}", ["<", "<=", ">", ">="][op]);
        let f: SizeFilter = text.parse().unwrap();
        prop_assert_ne!(f.matches(size), f.complement().matches(size));
    }
}

fn design(seed: u64, n: usize, p: usize) -> (Matrix, Vec<f64>) {
    let mut g = XorShift64Star::new(seed);
    let mut u = move || (g.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| std::iter::once(1.0).chain((1..p).map(|_| u())).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.iter().enumerate().map(|(j, v)| v * j as f64).sum::<f64>() + u()).collect();
    (Matrix::from_rows(&rows), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_of_squares_decomposition(seed in any::<u64>(), n in 12usize..80, p in 2usize..6) {
        let (x, y) = design(seed, n, p);
        let fit = fit_ols(&x, &y).unwrap();
        prop_assert!((fit.sst - (fit.ss_model() + fit.sse)).abs() <= 1e-8 * fit.sst);
    }

    #[test]
    fn partial_f_ignores_column_order(seed in any::<u64>(), n in 12usize..60) {
        let (x, y) = design(seed, n, 4);
        let (_, f1, p1) = anova_partial_f(&x, &y, &[2]).unwrap();
        let perm = [0usize, 3, 2, 1];
        let xp = x.select_columns(&perm);
        let (_, f2, p2) = anova_partial_f(&xp, &y, &[2]).unwrap();
        prop_assert!((f1 - f2).abs() <= 1e-8 * f1.max(1.0));
        prop_assert!((p1 - p2).abs() <= 1e-8);
    }

    #[test]
    fn noise_column_never_raises_sse(seed in any::<u64>(), n in 12usize..60) {
        let (x, y) = design(seed, n, 3);
        let (wide, _) = design(seed ^ 0xABCD, n, 4);
        let mut cols: Vec<Vec<f64>> = (0..3).map(|j| x.column(j)).collect();
        cols.push(wide.column(3));
        let base = fit_ols(&x, &y).unwrap().sse;
        let more = fit_ols(&Matrix::from_columns(&cols), &y).unwrap().sse;
        prop_assert!(more <= base * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn hsd_groups_agree_with_pairwise_tests(seed in any::<u64>(), k in 2usize..9) {
        let mut g = XorShift64Star::new(seed);
        let samples: Vec<(String, Vec<f64>)> = (0..k)
            .map(|c| {
                let centre = (g.next_u64() % 6) as f64;
                (format!("C{c}"), (0..6).map(|_| centre + (g.next_u64() % 1000) as f64 / 500.0).collect())
            })
            .collect();
        let r = tukey_kramer(&samples, 0.05, None).unwrap();
        let member = r.membership();
        for i in 0..k {
            for j in i + 1..k {
                let share = (0..r.groups.len()).any(|t| member[i][t] && member[j][t]);
                // equal n: a non-significant outer pair implies every inner pair is too
                prop_assert_eq!(share, !r.significant(i, j), "{} {}", i, j);
            }
        }
        prop_assert_eq!(greedy_groups(k, |a, b| r.significant(a, b)), r.groups.clone());
    }

    #[test]
    fn plan_is_a_permutation(seed in any::<u64>(), nc in 1usize..6, nf in 1usize..8) {
        let names = ["ARI", "BWT", "XMI", "XZP"];
        let reg = xmlbench::codec::CodecRegistry::load(&names[..nc.min(4)].join(",")).unwrap();
        let files: Vec<String> = (0..nf).map(|i| format!("f{i}")).collect();
        let plan = build_plan(&files, &reg, seed, &[xmlbench::codec::Mode::Default], 0.0).unwrap();
        let mut got: Vec<(String, String)> = plan.combos.iter().map(|c| (c.codec.clone(), c.file.clone())).collect();
        got.sort();
        let mut want: Vec<(String, String)> = names[..nc.min(4)].iter().flat_map(|c| files.iter().map(move |f| (c.to_string(), f.clone()))).collect();
        want.sort();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn bwt_exhaustive_short_strings() {
    let mut count = 0usize;
    for len in 0..=12u32 {
        for code in 0..3u64.pow(len) {
            let mut v = Vec::with_capacity(len as usize);
            let mut c = code;
            for _ in 0..len {
                v.push(b"abc"[(c % 3) as usize]);
                c /= 3;
            }
            assert_eq!(bwt::bwt_inverse(&bwt::bwt_forward(&v)).unwrap(), v);
            count += 1;
        }
    }
    assert_eq!(count, (3usize.pow(13) - 1) / 2);
}

#[test]
fn ari_rate_bounds() {
    let mut g = XorShift64Star::new(77);
    // skewed iid source over 6 symbols
    let weights = [40u64, 25, 15, 10, 6, 4];
    let data: Vec<u8> = (0..80_000)
        .map(|_| {
            let mut r = g.next_u64() % 100;
            weights.iter().position(|&w| if r < w { true } else { r -= w; false }).unwrap() as u8
        })
        .collect();
    let h1 = histogram_h1(&data);
    let out = Pipeline::ari().compress(&data).unwrap();
    let bound = data.len() as f64 * (h1 + 0.08) / 8.0 + FRAME_HEADER as f64;
    assert!((out.len() as f64) <= bound, "{} > {bound}", out.len());
    let noise: Vec<u8> = (0..70_000).map(|_| (g.next_u64() >> 56) as u8).collect();
    let out = Pipeline::ari().compress(&noise).unwrap();
    assert!(out.len() as f64 <= noise.len() as f64 * 1.01 + FRAME_HEADER as f64);
}

#[test]
fn higher_order_entropy_of_a_markov_chain_does_not_rise() {
    // order-1 chain with sticky transitions
    let mut g = XorShift64Star::new(5);
    let mut s = 0u8;
    let data: Vec<u8> = (0..400_000)
        .map(|_| {
            if g.next_u64() % 10 >= 8 {
                s = (g.next_u64() % 4) as u8;
            }
            s
        })
        .collect();
    let h: Vec<f64> = (1..=4).map(|n| shannon_entropy(&data, n).unwrap().bits_per_symbol).collect();
    // sampling noise at this length stays well under 0.01 bit
    for w in h.windows(2) {
        assert!(w[1] <= w[0] + 0.01, "{h:?}");
    }
}
