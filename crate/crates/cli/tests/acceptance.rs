//! The binding acceptance checks for this artifact, one test per criterion.
//! Each test prints a single `PASS:` line with its measurements; a failed
//! assertion panics with a `FAIL:` message instead. Benchmarks run against
//! the checked-in CSVs under `data/`; every check carries the runtime budget
//! it must stay inside.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rexkit::dataset::{
    builtin_fixture, inconsistency_rate, load_breast, load_iris, AttributeSchema, Dataset,
    Fixture, Pattern, Value,
};
use rexkit::network::{init_network, loss_gradients, Network};
use rexkit::pipeline::{benchmark_profile, run, Benchmark, Mode, PipelineConfig};
use rexkit::rex::{
    candidate_conditions, extract, run_rex, Condition, ExtractConfig, Rule, SearchMode,
};

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn budget(t: Instant, limit_ms: u128, what: &str) -> u128 {
    let ms = t.elapsed().as_millis();
    assert!(ms < limit_ms, "FAIL: {what} took {ms} ms, budget {limit_ms} ms");
    ms
}

#[test]
fn acceptance_01_golf_direct_defaults() {
    let t = Instant::now();
    let data = builtin_fixture::<f64>(Fixture::Golf);
    let out = run(&data, &PipelineConfig::default()).unwrap();
    let r = &out.report;
    assert_eq!(r.train_accuracy, 1.0, "FAIL: golf accuracy {}", r.train_accuracy);
    assert!(
        r.rule_count_incl_default <= 3,
        "FAIL: golf has {} rules incl default, want <= 3",
        r.rule_count_incl_default
    );
    assert!(
        r.avg_conditions_per_rule <= 2.0,
        "FAIL: golf avg conditions {}",
        r.avg_conditions_per_rule
    );
    let ms = budget(t, 1_000, "golf direct");
    println!(
        "PASS: golf direct: accuracy 100%, {} rules incl default, avg {:.2} conditions, {ms} ms",
        r.rule_count_incl_default, r.avg_conditions_per_rule
    );
}

#[test]
fn acceptance_02_season_direct_defaults() {
    let t = Instant::now();
    let data = builtin_fixture::<f64>(Fixture::Season);
    let out = run(&data, &PipelineConfig::default()).unwrap();
    let r = &out.report;
    assert_eq!(r.train_accuracy, 1.0, "FAIL: season accuracy {}", r.train_accuracy);
    assert!(
        (4..=5).contains(&r.rule_count_incl_default),
        "FAIL: season has {} rules incl default, want 4..=5",
        r.rule_count_incl_default
    );
    let ms = budget(t, 1_000, "season direct");
    println!(
        "PASS: season direct: accuracy 100%, {} rules incl default, {ms} ms",
        r.rule_count_incl_default
    );
}

#[test]
fn acceptance_03_iris_direct() {
    let t = Instant::now();
    let data = load_iris::<f64>(&data_path("iris.csv")).unwrap();
    let out = run(&data, &benchmark_profile(Benchmark::Iris)).unwrap();
    let r = &out.report;
    assert!(
        r.train_accuracy >= 0.96,
        "FAIL: iris accuracy {}, want >= 0.96",
        r.train_accuracy
    );
    assert!(
        r.rule_count_excl_default <= 4,
        "FAIL: iris has {} non-default rules, want <= 4",
        r.rule_count_excl_default
    );
    assert!(
        r.avg_conditions_per_rule <= 2.0,
        "FAIL: iris avg conditions {}",
        r.avg_conditions_per_rule
    );
    let ms = budget(t, 10_000, "iris direct");
    println!(
        "PASS: iris direct: accuracy {:.2}%, {} non-default rules, avg {:.2} conditions, {ms} ms",
        r.train_accuracy * 100.0,
        r.rule_count_excl_default,
        r.avg_conditions_per_rule
    );
}

#[test]
fn acceptance_04_breast_direct_greedy() {
    let t = Instant::now();
    let data = load_breast::<f64>(&data_path("breast-cancer.csv")).unwrap();
    let cfg = benchmark_profile(Benchmark::Breast);
    assert_eq!(cfg.extract.search_mode, SearchMode::Greedy);
    let out = run(&data, &cfg).unwrap();
    let r = &out.report;
    assert!(
        r.train_accuracy >= 0.95,
        "FAIL: breast accuracy {}, want >= 0.95",
        r.train_accuracy
    );
    assert!(
        r.rule_count_excl_default <= 4,
        "FAIL: breast has {} non-default rules, want <= 4",
        r.rule_count_excl_default
    );

    let benign = data
        .classes
        .iter()
        .position(|c| c == "benign")
        .expect("breast data has a benign class");
    let referenced: BTreeSet<&str> = out
        .ruleset
        .rules
        .iter()
        .filter(|rule| rule.class == benign)
        .flat_map(|rule| rule.conditions.iter())
        .map(|cond| data.schema[cond.attribute].name.as_str())
        .collect();
    let key_attrs = ["A1", "A6", "A9"];
    let hits: Vec<&str> = key_attrs
        .iter()
        .copied()
        .filter(|name| referenced.contains(name))
        .collect();
    assert!(
        hits.len() >= 2,
        "FAIL: benign rules reference {referenced:?}, want at least two of {key_attrs:?}"
    );
    let ms = budget(t, 60_000, "breast direct greedy");
    println!(
        "PASS: breast greedy: accuracy {:.2}%, {} non-default rules, benign uses {hits:?}, {ms} ms",
        r.train_accuracy * 100.0,
        r.rule_count_excl_default
    );
}

/// Small random dataset with deliberately contradictory labels.
fn synthetic(case: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(5_000 + case);
    let symbol_pool = ["a", "b", "c"];
    let n_cat = rng.gen_range(1..=2usize);
    let n_cont = rng.gen_range(1..=2usize);
    let mut schema = Vec::new();
    let mut sizes = Vec::new();
    for a in 0..n_cat {
        let k = rng.gen_range(2..=3usize);
        schema.push(AttributeSchema::categorical(
            &format!("x{a}"),
            &symbol_pool[..k],
        ));
        sizes.push(k);
    }
    for a in 0..n_cont {
        schema.push(AttributeSchema::continuous(&format!("y{a}")));
    }
    let n_classes = rng.gen_range(2..=3usize);
    let classes: Vec<String> = (0..n_classes).map(|c| format!("c{c}")).collect();

    let n = rng.gen_range(12..=28usize);
    let mut patterns = Vec::with_capacity(n);
    for _ in 0..n {
        let mut values = Vec::with_capacity(schema.len());
        for (a, _) in schema.iter().enumerate().take(n_cat) {
            values.push(Value::Symbol(rng.gen_range(0..sizes[a])));
        }
        for _ in 0..n_cont {
            values.push(Value::Number(rng.gen_range(0..5) as f64));
        }
        patterns.push(Pattern {
            values,
            label: rng.gen_range(0..n_classes),
        });
    }
    // Force identical attribute vectors with disagreeing labels.
    for _ in 0..3 {
        let from = rng.gen_range(0..n);
        let to = rng.gen_range(0..n);
        patterns[to].values = patterns[from].values.clone();
        patterns[to].label = (patterns[from].label + 1) % n_classes;
    }
    Dataset {
        schema,
        classes,
        patterns,
    }
}

#[test]
fn acceptance_05_training_error_within_the_inconsistency_rate() {
    let t = Instant::now();
    let mut checked = 0usize;

    let mut check = |data: &Dataset<f64>, cfg: &ExtractConfig, what: &str| {
        let rs = run_rex(data, cfg).unwrap();
        let error = 1.0 - rs.accuracy(data);
        let bound = inconsistency_rate(data);
        assert!(
            error <= bound + 1e-9,
            "FAIL: {what}: training error {error:.4} exceeds inconsistency rate {bound:.4}"
        );
        checked += 1;
    };

    let exhaustive = ExtractConfig::default();
    let greedy = ExtractConfig {
        search_mode: SearchMode::Greedy,
        ..ExtractConfig::default()
    };

    check(&builtin_fixture(Fixture::Golf), &exhaustive, "golf");
    check(&builtin_fixture(Fixture::Season), &exhaustive, "season");
    check(
        &load_iris(&data_path("iris.csv")).unwrap(),
        &exhaustive,
        "iris",
    );
    check(
        &load_breast(&data_path("breast-cancer.csv")).unwrap(),
        &greedy,
        "breast",
    );
    for case in 0..50 {
        let data = synthetic(case);
        check(&data, &exhaustive, &format!("synthetic {case} exhaustive"));
        check(&data, &greedy, &format!("synthetic {case} greedy"));
    }

    let ms = budget(t, 30_000, "inconsistency bound");
    println!("PASS: training error <= inconsistency rate on {checked} runs, {ms} ms");
}

#[test]
fn acceptance_06_rule_order_is_irrelevant() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut compared = 0usize;
    for fixture in [Fixture::Golf, Fixture::Season] {
        let data = builtin_fixture::<f64>(fixture);
        let baseline = run_rex(&data, &ExtractConfig::default()).unwrap();
        let expected: Vec<usize> = data
            .patterns
            .iter()
            .map(|p| baseline.classify(&p.values))
            .collect();
        let mut shuffled = baseline.clone();
        for _ in 0..100 {
            shuffled.rules.shuffle(&mut rng);
            for (pattern, &want) in data.patterns.iter().zip(&expected) {
                let got = shuffled.classify(&pattern.values);
                assert_eq!(
                    got, want,
                    "FAIL: permuted ruleset disagrees on {:?}",
                    pattern.values
                );
                compared += 1;
            }
        }
    }
    let ms = budget(t, 10_000, "order insensitivity");
    println!("PASS: 200 rule permutations, {compared} classifications unchanged, {ms} ms");
}

/// True iff no pattern of another class satisfies every chosen condition.
fn consistent(conds: &[&Condition<f64>], data: &Dataset<f64>, label: usize) -> bool {
    !data.patterns.iter().any(|p| {
        p.label != label && conds.iter().all(|c| c.holds(&p.values))
    })
}

/// Is there any consistent conjunction of exactly `len` of the candidates?
fn any_consistent_combo(
    cands: &[Condition<f64>],
    len: usize,
    data: &Dataset<f64>,
    label: usize,
) -> bool {
    fn rec<'c>(
        cands: &'c [Condition<f64>],
        start: usize,
        left: usize,
        acc: &mut Vec<&'c Condition<f64>>,
        data: &Dataset<f64>,
        label: usize,
    ) -> bool {
        if left == 0 {
            return consistent(acc, data, label);
        }
        if start + left > cands.len() {
            return false;
        }
        for i in start..=cands.len() - left {
            acc.push(&cands[i]);
            if rec(cands, i + 1, left - 1, acc, data, label) {
                return true;
            }
            acc.pop();
        }
        false
    }
    rec(cands, 0, len, &mut Vec::new(), data, label)
}

/// Pairs every extracted rule with the sequential-covering seed it grew from.
fn rules_with_seeds(data: &Dataset<f64>, rules: &[Rule<f64>]) -> Vec<(usize, usize)> {
    let mut covered = vec![false; data.patterns.len()];
    let mut out = Vec::new();
    for rule in rules {
        let seed = covered
            .iter()
            .position(|&c| !c)
            .expect("every extraction round starts from an uncovered pattern");
        assert!(
            rule.covers(&data.patterns[seed].values),
            "FAIL: rule {} does not cover its own seed",
            rule.id
        );
        out.push((rule.id, seed));
        for (i, p) in data.patterns.iter().enumerate() {
            if rule.covers(&p.values) {
                covered[i] = true;
            }
        }
    }
    out
}

#[test]
fn acceptance_07_rule_lengths_match_a_brute_force_oracle() {
    let t = Instant::now();
    let mut exhaustive_rules = 0usize;
    let mut greedy_rules = 0usize;

    for fixture in [Fixture::Golf, Fixture::Season] {
        let data = builtin_fixture::<f64>(fixture);

        let cfg = ExtractConfig::default();
        let rules = extract(&data.patterns, &data.schema, &cfg).unwrap();
        for (id, seed_idx) in rules_with_seeds(&data, &rules) {
            let seed = &data.patterns[seed_idx];
            let cands = candidate_conditions(seed, &data.schema, &data.patterns);
            let len = rules[id].conditions.len();
            for shorter in 1..len {
                assert!(
                    !any_consistent_combo(&cands, shorter, &data, seed.label),
                    "FAIL: exhaustive rule {id} has {len} conditions but a \
                     consistent conjunction of {shorter} exists"
                );
            }
            exhaustive_rules += 1;
        }

        let cfg = ExtractConfig {
            search_mode: SearchMode::Greedy,
            ..ExtractConfig::default()
        };
        let rules = extract(&data.patterns, &data.schema, &cfg).unwrap();
        for (id, seed_idx) in rules_with_seeds(&data, &rules) {
            let seed = &data.patterns[seed_idx];
            let cands = candidate_conditions(seed, &data.schema, &data.patterns);
            let len = rules[id].conditions.len();
            let minimum = (1..=len)
                .find(|&k| any_consistent_combo(&cands, k, &data, seed.label))
                .expect("the greedy rule itself is a consistent conjunction");
            assert!(
                len <= minimum + 1,
                "FAIL: greedy rule {id} has {len} conditions, oracle minimum is {minimum}"
            );
            greedy_rules += 1;
        }
    }

    let ms = budget(t, 30_000, "shortest-rule oracle");
    println!(
        "PASS: {exhaustive_rules} exhaustive rules at oracle minimum, \
         {greedy_rules} greedy rules within one condition, {ms} ms"
    );
}

fn pattern_loss(net: &Network<f64>, input: &[f64], label: usize) -> f64 {
    let (_, outputs) = net.forward(input);
    outputs
        .iter()
        .enumerate()
        .map(|(o, &y)| {
            let target = if o == label { 1.0 } else { 0.0 };
            (y - target) * (y - target)
        })
        .sum()
}

#[test]
fn acceptance_08_backprop_matches_central_differences() {
    let t = Instant::now();
    let eps = 1e-5;
    let mut checked = 0usize;

    for seed in 0..6u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let input_count = rng.gen_range(2..=4usize);
        let hidden_count = rng.gen_range(1..=3usize);
        let output_count = rng.gen_range(2..=3usize);
        let mut net: Network<f64> = init_network(input_count, output_count, seed);
        net.hidden_count = hidden_count;
        net.weights_ih = (0..hidden_count)
            .map(|_| (0..input_count).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        net.weights_ho = (0..output_count)
            .map(|_| (0..hidden_count).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        net.bias_h = (0..hidden_count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        net.bias_o = (0..output_count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        net.mask_ih = (0..hidden_count)
            .map(|_| (0..input_count).map(|_| rng.gen_range(0..5) > 0).collect())
            .collect();
        net.mask_ho = vec![vec![true; hidden_count]; output_count];

        let input: Vec<f64> = (0..input_count).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let label = rng.gen_range(0..output_count);
        let grad = loss_gradients(&net, &input, label);

        let mut verify = |analytic: f64, perturb: &mut dyn FnMut(&mut Network<f64>, f64)| {
            let mut plus = net.clone();
            perturb(&mut plus, eps);
            let mut minus = net.clone();
            perturb(&mut minus, -eps);
            let numeric =
                (pattern_loss(&plus, &input, label) - pattern_loss(&minus, &input, label))
                    / (2.0 * eps);
            let scale = (analytic.abs() + numeric.abs()).max(1e-6);
            assert!(
                (analytic - numeric).abs() / scale < 1e-4,
                "FAIL: gradient mismatch, analytic {analytic}, numeric {numeric}"
            );
            checked += 1;
        };

        for h in 0..hidden_count {
            for i in 0..input_count {
                verify(grad.ih[h][i], &mut |n, d| n.weights_ih[h][i] += d);
            }
            verify(grad.bias_h[h], &mut |n, d| n.bias_h[h] += d);
        }
        for o in 0..output_count {
            for h in 0..hidden_count {
                verify(grad.ho[o][h], &mut |n, d| n.weights_ho[o][h] += d);
            }
            verify(grad.bias_o[o], &mut |n, d| n.bias_o[o] += d);
        }
    }

    let ms = budget(t, 5_000, "gradient check");
    println!("PASS: {checked} gradients within 1e-4 of central differences, {ms} ms");
}

#[test]
fn acceptance_09_network_pipeline_on_iris() {
    let t = Instant::now();
    let data = load_iris::<f64>(&data_path("iris.csv")).unwrap();

    let direct = run(&data, &benchmark_profile(Benchmark::Iris)).unwrap();

    let mut cfg = PipelineConfig::<f64>::default();
    cfg.mode = Mode::Reann;
    let reann = run(&data, &cfg).unwrap();

    let agreement = reann
        .discretization_agreement
        .expect("network mode reports the discretization agreement");
    assert_eq!(
        agreement, 1.0,
        "FAIL: snapped activations disagree with the network on training data"
    );
    let fidelity = reann
        .report
        .fidelity_to_network
        .expect("network mode reports fidelity");
    assert!(fidelity >= 0.95, "FAIL: fidelity {fidelity}, want >= 0.95");
    let gap = (reann.report.train_accuracy - direct.report.train_accuracy).abs();
    assert!(
        gap <= 0.03 + 1e-9,
        "FAIL: network-path accuracy {} vs direct {} differs by {:.4}, want <= 0.03",
        reann.report.train_accuracy,
        direct.report.train_accuracy,
        gap
    );

    let ms = budget(t, 120_000, "iris network pipeline");
    println!(
        "PASS: iris network path: discretization agreement 100%, fidelity {:.2}%, \
         accuracy {:.2}% vs direct {:.2}%, {ms} ms",
        fidelity * 100.0,
        reann.report.train_accuracy * 100.0,
        direct.report.train_accuracy * 100.0
    );
}

fn file_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, map: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, map);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                map.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut map = BTreeMap::new();
    walk(root, root, &mut map);
    map
}

#[test]
fn acceptance_10_reproduce_is_byte_deterministic() {
    let t = Instant::now();
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_rexkit"))
            .env_remove("REXKIT_SEED")
            .arg("reproduce")
            .arg("--out")
            .arg(dir.path())
            .arg("--iris")
            .arg(data_path("iris.csv"))
            .arg("--breast")
            .arg(data_path("breast-cancer.csv"))
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "FAIL: reproduce run did not succeed");
        trees.push(file_tree(dir.path()));
    }
    assert_eq!(
        trees[0].keys().collect::<Vec<_>>(),
        trees[1].keys().collect::<Vec<_>>(),
        "FAIL: the two runs wrote different file sets"
    );
    for (name, content) in &trees[0] {
        assert_eq!(
            Some(content),
            trees[1].get(name),
            "FAIL: artifact {name} differs between identical runs"
        );
    }
    let files = trees[0].len();
    let ms = t.elapsed().as_millis();
    println!("PASS: two reproduce runs, {files} artifacts byte-identical, {ms} ms");
}
