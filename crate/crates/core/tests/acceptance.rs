//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the report prints in order; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skill_corpus::bleu::{bleu, bleu_with, BleuOptions};
use skill_corpus::dataset::{build_mlm_samples_from_ids, make_splits, reconstruct, MlmOptions, SplitOptions};
use skill_corpus::eval::{correlate, pearson, CorrelationError, EvalReport, HumanScore, KindSummary, ModelReport, PairScore};
use skill_corpus::lint::{delta_liq, lint_file};
use skill_corpus::miner::{
    file_rejection, mine_remote, url_rejection, GithubClient, MineRemoteOptions, MiningState, ReplayTransport,
    FILE_PATTERNS, URL_KEYWORDS,
};
use skill_corpus::pairs::{mark_top_level, mine_pairs, normalized};
use skill_corpus::pipeline::{ingest, run_pipeline, PipelineConfig, SourceConfig};
use skill_corpus::syntax::{lex, TokenKind};
use skill_corpus::tokenizer::{is_sentinel, BYTE_BASE};
use skill_corpus::{Origin, Pair, PairKind, SourceFile, Span, Split, TrainingStrategy};

type Outcome = Result<String, String>;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------- BLEU

/// Clipped n-gram precision by direct enumeration, no hashing.
fn oracle_precision(cand: &[u32], reference: &[u32], n: usize) -> Option<f64> {
    if cand.len() < n {
        return None;
    }
    let cand_grams: Vec<&[u32]> = cand.windows(n).collect();
    let ref_grams: Vec<&[u32]> = if reference.len() >= n { reference.windows(n).collect() } else { Vec::new() };
    let mut seen: Vec<&[u32]> = Vec::new();
    let mut clipped = 0usize;
    for g in &cand_grams {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        let in_cand = cand_grams.iter().filter(|h| *h == g).count();
        let in_ref = ref_grams.iter().filter(|h| *h == g).count();
        clipped += in_cand.min(in_ref);
    }
    Some(clipped as f64 / cand_grams.len() as f64)
}

fn oracle_bleu(cand: &[u32], reference: &[u32]) -> f64 {
    let mut log_sum = 0.0;
    for n in 1..=4 {
        match oracle_precision(cand, reference, n) {
            Some(p) if p > 0.0 => log_sum += p.ln(),
            _ => return 0.0,
        }
    }
    let bp = if cand.len() < reference.len() {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    } else {
        1.0
    };
    bp * (log_sum / 4.0).exp()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut zero_cases = 0;
    for _ in 0..200 {
        let alphabet = rng.gen_range(2..12u32);
        let lc = rng.gen_range(1..=64);
        let lr = rng.gen_range(1..=64);
        let cand: Vec<u32> = (0..lc).map(|_| rng.gen_range(0..alphabet)).collect();
        let reference: Vec<u32> = (0..lr).map(|_| rng.gen_range(0..alphabet)).collect();
        let got = bleu(&cand, &reference).map_err(|e| e.to_string())?.score;
        let want = oracle_bleu(&cand, &reference);
        worst = worst.max((got - want).abs());
        if oracle_precision(&cand, &reference, 4).unwrap_or(0.0) == 0.0 {
            zero_cases += 1;
            check(got == 0.0, format!("zero 4-gram precision scored {got}"))?;
        }
        let same = bleu(&reference, &reference).map_err(|e| e.to_string())?.score;
        if reference.len() >= 4 {
            check(same == 1.0, format!("identical sequences scored {same}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(worst <= 1e-12, format!("max |impl - oracle| = {worst:e}"))?;
    check(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("200 pairs, max |diff| {worst:e}, {zero_cases} zero-4-gram cases, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let ids = |s: &str| s.split(' ').map(|w| w.as_bytes()[0] as u32).collect::<Vec<_>>();
    let first = bleu(&ids("a b c d e f"), &ids("a b c x e f")).map_err(|e| e.to_string())?;
    check(first.score == 0.0, format!("first case scored {}", first.score))?;
    let expect = [5.0 / 6.0, 3.0 / 5.0, 1.0 / 4.0, 0.0];
    check(first.precisions == expect, format!("precisions {:?}", first.precisions))?;
    let second = bleu_with(&ids("a b c d"), &ids("a b c d e"), BleuOptions::default()).map_err(|e| e.to_string())?;
    let want = (1.0f64 - 5.0 / 4.0).exp();
    check((second.score - want).abs() <= 1e-15, format!("second case {} vs {want}", second.score))?;
    Ok(format!("0.0 and {:.6} = exp(1 - 5/4)", second.score))
}

// ---------------------------------------------------------------- MLM

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let options = MlmOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ids: Vec<u32> = (0..1000 * 512).map(|_| rng.gen_range(BYTE_BASE..8000)).collect();
    let samples = build_mlm_samples_from_ids(&ids, &[(0, "synthetic".to_string())], 3, &options);
    check(samples.len() == 1000, format!("{} samples", samples.len()))?;
    let (mut masked, mut spans) = (0usize, 0usize);
    let mut fraction_sum = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let chunk = &ids[i * 512..(i + 1) * 512];
        // Independent reading of the targets: sentinel, span tokens, ...,
        // closing sentinel.
        let mut lengths: Vec<usize> = Vec::new();
        let mut by_sentinel: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let mut current = None;
        for &id in &s.target_ids {
            if is_sentinel(id) {
                lengths.push(0);
                by_sentinel.insert(id, Vec::new());
                current = Some(id);
            } else {
                *lengths.last_mut().ok_or("target starts without a sentinel")? += 1;
                by_sentinel.get_mut(&current.unwrap()).unwrap().push(id);
            }
        }
        check(lengths.pop() == Some(0), format!("sample {i}: no closing sentinel"))?;
        let rebuilt: Vec<u32> = s
            .corrupted_ids
            .iter()
            .flat_map(|id| if is_sentinel(*id) { by_sentinel[id].clone() } else { vec![*id] })
            .collect();
        check(rebuilt == chunk, format!("sample {i} does not reconstruct"))?;
        check(reconstruct(&s.corrupted_ids, &s.target_ids) == chunk, format!("library reconstruct failed on {i}"))?;
        let m: usize = lengths.iter().sum();
        masked += m;
        spans += lengths.len();
        fraction_sum += m as f64 / 512.0;
    }
    let fraction = fraction_sum / 1000.0;
    let mean_span = masked as f64 / spans as f64;
    let elapsed = start.elapsed();
    check((0.14..=0.16).contains(&fraction), format!("mean masked fraction {fraction:.4}"))?;
    check((2.8..=3.2).contains(&mean_span), format!("mean span length {mean_span:.4}"))?;
    check(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "masked fraction {fraction:.4}, mean span {mean_span:.3}, all 1000 reconstruct, {elapsed:.2?}"
    ))
}

// ---------------------------------------------------------------- pairs

fn criterion_4() -> Outcome {
    let dir = fixtures().join("pairs");
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| e.to_string());
    let after = |text: &str, needle: &str| text.find(needle).map(|i| i + needle.len()).unwrap();

    let cf = read("comment_function.il")?;
    let fc = read("function_completion.il")?;
    let cc = read("comment_code.il")?;
    let cases = [
        (
            "comment_function.il",
            &cf,
            PairKind::CF,
            Span::new(0, after(&cf, "((width 1.0) (length 2.0))")),
            Span::new(cf.find("let((cv)").unwrap(), cf.rfind("\n)").unwrap()),
        ),
        (
            "function_completion.il",
            &fc,
            PairKind::FC,
            Span::new(0, after(&fc, "procedure(placeRow(cv master count pitch)")),
            Span::new(fc.find("let((insts)").unwrap(), fc.rfind("\n)").unwrap()),
        ),
        (
            "comment_code.il",
            &cc,
            PairKind::CC,
            Span::new(cc.find("/* Label").unwrap(), after(&cc, "cell. */")),
            Span::new(cc.find("dbCreateLabel").unwrap(), cc.find("\ndbSave").unwrap()),
        ),
    ];
    for (name, text, kind, input, output) in cases {
        let pairs = mine_pairs(&SourceFile::new(Origin::PrimaryProprietary, name, text.as_str()));
        check(pairs.len() == 1, format!("{name}: {} pairs", pairs.len()))?;
        let p = &pairs[0];
        check(
            p.kind == kind && p.input_span == input && p.output_span == output,
            format!(
                "{name}: got {:?} {}/{}, want {kind:?} {input}/{output}",
                p.kind, p.input_span, p.output_span
            ),
        )?;
    }
    Ok("CF, FC and CC fixtures match their input/output spans".into())
}

// ---------------------------------------------------------------- dedup

/// O(n^2) containment: a pair survives unless its normalized region is a
/// proper substring of another pair's region or an earlier pair has the
/// same region.
fn oracle_top_level(pairs: &[Pair]) -> Vec<bool> {
    let regions: Vec<String> = pairs.iter().map(|p| normalized(&p.region_text())).collect();
    (0..pairs.len())
        .map(|i| {
            !(0..pairs.len()).any(|j| {
                j != i
                    && ((regions[j].len() > regions[i].len() && regions[j].contains(&regions[i]))
                        || (j < i && regions[j] == regions[i]))
            })
        })
        .collect()
}

fn synthetic_pair(rng: &mut ChaCha8Rng, n: usize) -> Pair {
    let words = ["a", "b", "f(x)", "g(a b)", "/* c */", "x = 1"];
    let mut phrase = |max: usize| {
        let len = rng.gen_range(1..max);
        (0..len).map(|_| words[rng.gen_range(0..words.len())]).collect::<Vec<_>>().join(" ")
    };
    let input = phrase(4);
    let output = phrase(10);
    let text = format!("{input}\n{output}");
    let file = SourceFile::new(Origin::RepoSearch, format!("s{n}.il"), text.as_str());
    Pair::new(&file, PairKind::CC, Span::new(0, input.len()), Span::new(input.len() + 1, text.len())).unwrap()
}

fn nested_corpus() -> Vec<SourceFile> {
    (0..18)
        .map(|i| {
            let steps = if i < 4 { 22 } else { 21 };
            let body: String = (0..steps)
                .map(|k| format!("  /* step {k} of stage {i} */\n  v{k} = w * {k} + {i}\n"))
                .collect();
            let text = format!("/* Stage {i} of the flow. */\nprocedure(stage{i}(w)\n{body})\n");
            SourceFile::new(Origin::PrimaryProprietary, format!("stage{i}.il"), text)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for size in [0, 1, 2, 10, 50, 120, 250, 500] {
        for _ in 0..3 {
            let pairs: Vec<Pair> = (0..size).map(|n| synthetic_pair(&mut rng, n)).collect();
            let mut fast = pairs.clone();
            mark_top_level(&mut fast);
            let fast: Vec<bool> = fast.iter().map(|p| p.top_level).collect();
            check(fast == oracle_top_level(&pairs), format!("mismatch on a {size}-pair corpus"))?;
            checked += 1;
        }
    }
    let mut pairs: Vec<Pair> = nested_corpus().iter().flat_map(mine_pairs).collect();
    check(pairs.len() == 400, format!("nested fixture mined {} pairs", pairs.len()))?;
    mark_top_level(&mut pairs);
    let survivors: Vec<&Pair> = pairs.iter().filter(|p| p.top_level).collect();
    check(survivors.len() == 18, format!("{} survivors", survivors.len()))?;
    check(survivors.iter().all(|p| p.kind == PairKind::CF), "a nested pair survived")?;
    Ok(format!("{checked} random corpora match the oracle; 400-pair fixture keeps 18"))
}

// ---------------------------------------------------------------- splits

fn engineered_corpus() -> Vec<SourceFile> {
    let mut files: Vec<SourceFile> = (0..12)
        .map(|i| {
            let text = format!(
                "/* Scale the stage {i} width. */\nprocedure(scale{i}(w)\n  w * {i}\n)\n\n\
                 procedure(offset{i}(x)\n  x + {i}\n)\n\n\
                 /* Apply stage {i}. */\nresult{i} = scale{i}(offset{i}(1.0))\n"
            );
            SourceFile::new(Origin::PrimaryProprietary, format!("p{i}.il"), text)
        })
        .collect();
    files.push(SourceFile::new(Origin::PrimaryProprietary, "consts_a.il", "gridA = 0.005\n"));
    files.push(SourceFile::new(Origin::PrimaryProprietary, "consts_b.il", "gridB = 0.010\n"));
    for i in 0..4 {
        let text = format!("/* Open tool {i}. */\nprocedure(tool{i}()\n  hiOpen({i})\n)\n");
        files.push(SourceFile::new(Origin::RepoSearch, format!("r{i}.il"), text));
    }
    files
}

fn criterion_6() -> Outcome {
    let files = engineered_corpus();
    let mut pairs: Vec<Pair> = files.iter().flat_map(mine_pairs).collect();
    mark_top_level(&mut pairs);
    let strategy = TrainingStrategy::default();
    for seed in 0..5u64 {
        let run = || make_splits(&files, &pairs, seed, strategy, &SplitOptions::default()).map_err(|e| e.to_string());
        let a = run()?.manifest;
        check(a.to_jsonl() == run()?.manifest.to_jsonl(), format!("seed {seed}: manifests differ"))?;
        for split in [Split::Val, Split::Test] {
            let mut counts: BTreeMap<PairKind, usize> = BTreeMap::new();
            for p in a.pairs_in(split) {
                *counts.entry(p.kind).or_default() += 1;
            }
            let want: BTreeMap<PairKind, usize> = [(PairKind::CF, 6), (PairKind::FC, 6), (PairKind::CC, 6)].into();
            check(counts == want, format!("seed {seed} {}: {counts:?}", split.as_str()))?;
        }
        let mut seen_files = BTreeSet::new();
        for f in a.files() {
            check(f.split.is_some() && seen_files.insert(&f.id), format!("seed {seed}: file {} not in exactly one split", f.path))?;
        }
        check(seen_files.len() == files.len(), format!("seed {seed}: {} of {} files assigned", seen_files.len(), files.len()))?;
        for p in a.pairs().filter(|p| p.split.is_some()) {
            check(a.file_split(&p.file_id) == p.split, format!("seed {seed}: pair {} split from its file", p.id))?;
        }
        for name in ["consts_a.il", "consts_b.il"] {
            let f = files.iter().find(|f| f.path == name).unwrap();
            check(a.file_split(&f.id) == Some(Split::Train), format!("seed {seed}: {name} not in train"))?;
        }
    }
    Ok("5 seeds: val and test hold 6 CF, 6 FC, 6 CC; disjoint; deterministic; pairless primaries in train".into())
}

// ---------------------------------------------------------------- lint

fn fixture_corpus() -> Result<Vec<SourceFile>, String> {
    let root = fixtures();
    let mut sources: Vec<SourceConfig> = ["primary", "secondary", "repo", "code"]
        .iter()
        .map(|d| SourceConfig {
            path: root.join("mini_corpus").join(d),
            origin: Origin::PrimaryProprietary,
        })
        .collect();
    sources.push(SourceConfig {
        path: root.join("pairs"),
        origin: Origin::PrimaryProprietary,
    });
    ingest(&sources).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let files = fixture_corpus()?;
    let mut pairs_checked = 0;
    for f in &files {
        for pair in mine_pairs(f) {
            for prediction in [pair.reference_output(), pair.output_text.clone()] {
                let d = delta_liq(&pair, &prediction, f).map_err(|e| e.to_string())?;
                check(d == 0, format!("{}: delta {d} for pair {}", f.path, pair.id))?;
            }
            pairs_checked += 1;
        }
    }
    let mut injections = 0;
    let mut passing = 0;
    for f in &files {
        let base = lint_file(&f.text);
        if !base.passed() {
            continue;
        }
        passing += 1;
        // Offsets outside strings and comments: file ends and line starts.
        let quoted: Vec<(usize, usize)> = lex(&f.text)
            .iter()
            .filter(|t| matches!(t.kind, TokenKind::String | TokenKind::BlockComment | TokenKind::LineComment))
            .map(|t| (t.span.start, t.span.end))
            .collect();
        let mut offsets = vec![0, f.text.len()];
        offsets.extend(f.text.match_indices('\n').map(|(i, _)| i + 1));
        offsets.retain(|&o| !quoted.iter().any(|&(s, e)| s < o && o < e));
        for o in offsets {
            for delim in ["(", ")"] {
                let text = format!("{}{delim}{}", &f.text[..o], &f.text[o..]);
                let r = lint_file(&text);
                check(!r.passed(), format!("{}: `{delim}` at {o} still passes", f.path))?;
                check(r.iq <= base.iq, format!("{}: iq rose {} -> {}", f.path, base.iq, r.iq))?;
                injections += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = "()[]{}\"'/*; \n\tab,=+xprocedurelet".chars().collect();
    for _ in 0..2000 {
        let len = rng.gen_range(0..200);
        let text: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let iq = lint_file(&text).iq;
        check(iq <= 100, format!("iq {iq} for {text:?}"))?;
    }
    check(lint_file(&"f(a,b) (\n".repeat(200)).iq == 0, "heavy file not clamped to 0")?;
    Ok(format!(
        "delta 0 on {pairs_checked} pairs; {injections} injections into {passing} passing files all fail; iq in [0,100]"
    ))
}

// ---------------------------------------------------------------- pearson

fn criterion_8() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let xs = [1.0, 2.0, 3.0, 4.0];
    let up: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
    let down: Vec<f64> = xs.iter().map(|x| -0.5 * x + 9.0).collect();
    let r = |a: &[f64], b: &[f64]| pearson(a, b).map_err(|e| e.to_string());
    check(close(r(&xs, &up)?, 1.0), "r != 1 for an increasing linear relation")?;
    check(close(r(&xs, &down)?, -1.0), "r != -1 for a decreasing linear relation")?;
    check(close(r(&xs, &[2.0, 1.0, 4.0, 3.0])?, 0.6), "four-point case is not 0.6")?;
    check(pearson(&xs, &[5.0; 4]) == Err(CorrelationError::ZeroVariance), "constant series not undefined")?;

    // A kind whose human scores are constant is left out of the pooled rows.
    let mut pairs = Vec::new();
    let mut human = Vec::new();
    for (i, kind) in [PairKind::CF, PairKind::CF, PairKind::CF, PairKind::FC, PairKind::FC, PairKind::FC]
        .into_iter()
        .enumerate()
    {
        let id = format!("p{i}");
        pairs.push(PairScore {
            pair_id: id.clone(),
            kind,
            bleu: i as f64 / 10.0,
            bleu_n: vec![0.5; 4],
            delta_liq: -(i as i64),
        });
        let score = if kind == PairKind::FC { 3.0 } else { i as f64 };
        human.push(HumanScore {
            pair_id: id,
            model_name: "m".into(),
            score,
        });
    }
    let summary = KindSummary {
        count: 0,
        mean_bleu: 0.0,
        mean_delta_liq: 0.0,
    };
    let report = EvalReport {
        models: [(
            "m".to_string(),
            ModelReport {
                overall: summary.clone(),
                by_kind: BTreeMap::new(),
                pairs,
                missing: Vec::new(),
            },
        )]
        .into(),
        errors: Vec::new(),
    };
    let (rows, excluded) = correlate(&report, &human);
    check(excluded == [PairKind::FC], format!("excluded {excluded:?}"))?;
    let fc = rows.iter().find(|r| r.kind == Some(PairKind::FC) && r.metric == "bleu").ok_or("no FC row")?;
    check(fc.r == Err(CorrelationError::ZeroVariance), "FC row not undefined")?;
    let pooled = rows.iter().find(|r| r.kind.is_none() && r.metric == "bleu").ok_or("no pooled row")?;
    check(pooled.n == 3, format!("pooled row uses {} scores", pooled.n))?;
    Ok("r = +1, -1, 0.6 to 1e-12; zero variance undefined and excluded from pooling".into())
}

// ---------------------------------------------------------------- miner

fn dir_snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    for kw in URL_KEYWORDS {
        for variant in [kw.to_string(), kw.to_ascii_uppercase()] {
            let url = format!("https://github.com/org/tools{variant}kit/blob/main/a.il");
            check(url_rejection(&url) == Some(kw), format!("{url} not rejected by {kw}"))?;
        }
    }
    for p in FILE_PATTERNS {
        for ws in [" ", "\t", "\n"] {
            let text = format!("x = 1\nstart{ws}{p} extern\n");
            check(file_rejection(&text) == Some(p), format!("{p:?} after {ws:?} not rejected"))?;
        }
    }
    let clean = fixture_corpus()?;
    for f in &clean {
        check(file_rejection(&f.text).is_none(), format!("clean fixture {} rejected", f.path))?;
        check(url_rejection(&format!("https://github.com/acme/pcell-lib/blob/main/{}", f.path)).is_none(), "clean url rejected")?;
    }

    let replay = fixtures().join("github").join("replay.json");
    let library_run = || -> Result<String, String> {
        let transport = ReplayTransport::load(&replay).map_err(|e| e.to_string())?;
        let client = GithubClient::new(std::sync::Arc::new(transport)).with_sleeper(|_| {});
        let options = MineRemoteOptions {
            tokens: vec!["dbOpenCellViewByType".into()],
            ..MineRemoteOptions::default()
        };
        let outcome = mine_remote(&client, &options, MiningState::default()).map_err(|e| e.to_string())?;
        serde_json::to_string(&outcome).map_err(|e| e.to_string())
    };
    let first = library_run()?;
    check(first == library_run()?, "library mining runs differ")?;

    let bin = env!("CARGO_BIN_EXE_skill-corpus");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let status = std::process::Command::new(bin)
            .args(["mine-remote", "--tokens-from"])
            .arg(fixtures().join("github").join("token_corpus"))
            .args(["--fraction", "1", "--fixture"])
            .arg(&replay)
            .arg("--out")
            .arg(out.path())
            .env("RUST_LOG", "error")
            .env_remove("GITHUB_TOKEN")
            .status()
            .map_err(|e| e.to_string())?;
        check(status.success(), format!("mine-remote exited with {status}"))?;
        snapshots.push(dir_snapshot(out.path()));
    }
    check(snapshots[0] == snapshots[1], "CLI mining outputs differ between runs")?;
    let kept = snapshots[0].keys().filter(|k| k.starts_with("files")).count();
    check(kept == 4, format!("{kept} files kept from the fixture"))?;
    Ok(format!(
        "{} keywords and {} patterns reject; clean fixtures pass; replayed run byte-identical ({} output files)",
        URL_KEYWORDS.len(),
        FILE_PATTERNS.len(),
        snapshots[0].len()
    ))
}

// ---------------------------------------------------------------- end to end

fn criterion_10() -> Outcome {
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = PipelineConfig::load(&fixtures().join("mini_corpus.toml")).map_err(|e| e.to_string())?;
    config.out_dir = out.path().to_path_buf();
    let start = Instant::now();
    let first = run_pipeline(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let second = run_pipeline(&config).map_err(|e| e.to_string())?;
    check(elapsed < Duration::from_secs(10), format!("first run took {elapsed:?}"))?;
    check(first.manifest.digest() == second.manifest.digest(), "manifest digest changed on rerun")?;
    check(second.executed.is_empty(), format!("rerun recomputed {:?}", second.executed))?;
    for split in [Split::Train, Split::Val, Split::Test] {
        check(first.manifest.pairs_in(split).count() > 0, format!("{} has no pairs", split.as_str()))?;
    }
    for name in ["export-mlm", "export-seq2seq-train", "export-seq2seq-val", "export-seq2seq-test"] {
        let record = first.manifest.export(name).ok_or(format!("no {name} export"))?;
        check(record.count > 0, format!("{name} is empty"))?;
    }
    Ok(format!("first run {elapsed:.2?}, digest {} stable", &first.manifest.digest()[..12]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("BLEU oracle equivalence", criterion_1),
        ("hand-computed BLEU cases", criterion_2),
        ("MLM statistics and reconstruction", criterion_3),
        ("pair mining spans on fixtures", criterion_4),
        ("dedup equivalence and nested fixture", criterion_5),
        ("split properties", criterion_6),
        ("lint properties", criterion_7),
        ("Pearson closed forms and undefined cases", criterion_8),
        ("miner filters and offline reproducibility", criterion_9),
        ("end-to-end run", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
