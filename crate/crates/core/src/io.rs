//! File formats for every pipeline artifact. Matrices are written with 17
//! significant digits so binary64 values round-trip exactly; human-facing
//! report tables use 6.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::condition::ConditionSet;
use crate::error::{Error, Result};
use crate::ingest::{
    ActivityMatrix, FeatureVector, FixationMeasure, LayerId, TokenActivations, TokenFixationTable,
};
use crate::lingfeat::{parse_bracketed, Lexicon, ParseTree};
use crate::orders::{DisagreementVector, GroupAnova, Rsm};
use crate::rankstats::CorrelationReport;
use crate::rdm::{DissimilarityMeasure, Rdm};

/// Round-trip-exact binary64 rendering (17 significant digits).
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_human(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_p(x: f64) -> String {
    format!("{x:.6e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("{what}: `{s}` is not a number")))
}

// ---------------------------------------------------------------------------
// Activation JSONL

#[derive(Serialize, Deserialize)]
struct ActivationRecord {
    id: String,
    layer: String,
    vectors: Vec<Vec<f64>>,
}

/// One JSON object per line: `{"id": ..., "layer": "model:idx", "vectors": [[...], ...]}`.
pub fn read_activations_jsonl(path: &Path) -> Result<Vec<TokenActivations>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ActivationRecord = serde_json::from_str(&line).map_err(|e| {
            Error::Invalid(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        out.push(TokenActivations {
            condition: rec.id,
            layer: rec.layer.parse()?,
            vectors: rec.vectors,
        });
    }
    Ok(out)
}

pub fn write_activations_jsonl(path: &Path, records: &[TokenActivations]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in records {
        let json = serde_json::to_string(&ActivationRecord {
            id: rec.condition.clone(),
            layer: rec.layer.to_string(),
            vectors: rec.vectors.clone(),
        })
        .map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{json}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pooled matrix CSV: header `id,d0,...,d{H-1}`

pub fn write_pooled_csv(path: &Path, matrix: &ActivityMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let h = matrix.dim();
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain((0..h).map(|d| format!("d{d}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, row) in matrix.data.iter().enumerate() {
        let cells: Vec<String> = std::iter::once(matrix.conditions.id(i).to_string())
            .chain(row.iter().map(|&v| fmt_exact(v)))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Reads a pooled matrix; the layer id is supplied by the caller because
/// the format does not carry one.
pub fn read_pooled_csv(path: &Path, layer: LayerId) -> Result<ActivityMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: empty file", path.display())))??;
    let h = header.split(',').count().saturating_sub(1);
    if h == 0 {
        return Err(Error::Invalid(format!("{}: no dimension columns", path.display())));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let id = cells
            .next()
            .ok_or_else(|| Error::Invalid("missing id column".into()))?;
        let row: Vec<f64> = cells
            .map(|c| parse_f64(c, "pooled matrix cell"))
            .collect::<Result<_>>()?;
        if row.len() != h {
            return Err(Error::DimensionMismatch {
                expected: h,
                got: row.len(),
            });
        }
        ids.push(id.to_string());
        data.push(row);
    }
    Ok(ActivityMatrix {
        conditions: ConditionSet::new(ids)?,
        layer,
        data,
    })
}

// ---------------------------------------------------------------------------
// Fixation CSV: id,word_index,word,participant,duration_ms,measure

pub fn read_fixations_csv(path: &Path) -> Result<Vec<TokenFixationTable>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Invalid(e.to_string()))?;
    // (id -> word_index -> (word, participant -> duration))
    let mut sentences: Vec<String> = Vec::new();
    #[allow(clippy::type_complexity)]
    let mut words: HashMap<String, Vec<Option<(String, HashMap<String, f64>)>>> = HashMap::new();
    let mut participants: Vec<String> = Vec::new();
    let mut measure: Option<FixationMeasure> = None;

    for record in reader.records() {
        let record = record.map_err(|e| Error::Invalid(e.to_string()))?;
        if record.len() < 6 {
            return Err(Error::Invalid(format!(
                "{}: fixation rows need 6 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let id = record[0].to_string();
        let word_index: usize = record[1]
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad word_index `{}`", &record[1])))?;
        let word = record[2].to_string();
        let participant = record[3].to_string();
        let duration = parse_f64(&record[4], "duration_ms")?;
        if duration < 0.0 {
            return Err(Error::Invalid(format!("negative duration {duration}")));
        }
        let m: FixationMeasure = record[5].trim().parse()?;
        match measure {
            None => measure = Some(m),
            Some(prev) if prev == m => {}
            Some(prev) => {
                return Err(Error::MixedMeasures {
                    first: prev.to_string(),
                    second: m.to_string(),
                })
            }
        }
        if !words.contains_key(&id) {
            sentences.push(id.clone());
            words.insert(id.clone(), Vec::new());
        }
        if !participants.contains(&participant) {
            participants.push(participant.clone());
        }
        let slots = words.get_mut(&id).unwrap();
        if slots.len() <= word_index {
            slots.resize(word_index + 1, None);
        }
        let slot = slots[word_index].get_or_insert_with(|| (word.clone(), HashMap::new()));
        if slot.0 != word {
            return Err(Error::Invalid(format!(
                "condition {id} word {word_index}: conflicting words `{}` vs `{word}`",
                slot.0
            )));
        }
        slot.1.insert(participant, duration);
    }
    let measure =
        measure.ok_or_else(|| Error::InsufficientData("no fixation records".into()))?;
    participants.sort();

    let mut out = Vec::new();
    for id in sentences {
        let slots = words.remove(&id).unwrap();
        let mut word_list = Vec::with_capacity(slots.len());
        let mut durations = Vec::with_capacity(slots.len());
        for (idx, slot) in slots.into_iter().enumerate() {
            let (word, by_participant) = slot.ok_or_else(|| {
                Error::Invalid(format!("condition {id}: missing word index {idx}"))
            })?;
            word_list.push(word);
            durations.push(
                participants
                    .iter()
                    .map(|p| by_participant.get(p).copied().unwrap_or(0.0))
                    .collect(),
            );
        }
        out.push(TokenFixationTable {
            condition: id,
            words: word_list,
            durations,
            measure,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// FeatureVector CSV: id,value

pub fn write_feature_csv(path: &Path, feature: &FeatureVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "id,value")?;
    for (i, &v) in feature.values.iter().enumerate() {
        writeln!(w, "{},{}", feature.conditions.id(i), fmt_exact(v))?;
    }
    Ok(())
}

pub fn read_feature_csv(path: &Path, name: impl Into<String>) -> Result<FeatureVector> {
    let reader = BufReader::new(File::open(path)?);
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| Error::Invalid(format!("{}:{}: expected id,value", path.display(), lineno + 1)))?;
        ids.push(id.to_string());
        values.push(parse_f64(value, "feature value")?);
    }
    Ok(FeatureVector {
        conditions: ConditionSet::new(ids)?,
        name: name.into(),
        values,
    })
}

// ---------------------------------------------------------------------------
// RDM CSV: first row/column are condition ids

pub fn write_rdm_csv(path: &Path, rdm: &Rdm) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = rdm.n();
    let header: Vec<String> = std::iter::once(String::new())
        .chain(rdm.conditions.ids().iter().cloned())
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..n {
        let cells: Vec<String> = std::iter::once(rdm.conditions.id(i).to_string())
            .chain((0..n).map(|j| fmt_exact(rdm.get(i, j))))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_rdm_csv(path: &Path, measure: DissimilarityMeasure) -> Result<Rdm> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: empty file", path.display())))??;
    let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let n = ids.len();
    let conditions = ConditionSet::new(ids)?;
    let mut data = vec![0.0; n * n];
    let mut row_count = 0;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if row_count >= n {
            return Err(Error::Invalid(format!("{}: too many rows", path.display())));
        }
        let mut cells = line.split(',');
        let id = cells.next().unwrap_or_default();
        if id != conditions.id(row_count) {
            return Err(Error::Invalid(format!(
                "row/column id mismatch: `{id}` vs `{}`",
                conditions.id(row_count)
            )));
        }
        for j in 0..n {
            let cell = cells
                .next()
                .ok_or_else(|| Error::Invalid(format!("row {row_count}: missing cell {j}")))?;
            data[row_count * n + j] = parse_f64(cell, "rdm cell")?;
        }
        row_count += 1;
    }
    if row_count != n {
        return Err(Error::Invalid(format!(
            "{}: expected {n} rows, got {row_count}",
            path.display()
        )));
    }
    Rdm::from_matrix(conditions, measure, data)
}

// ---------------------------------------------------------------------------
// Disagreement CSV: id,agreement,disagreement

pub fn write_disagreement_csv(path: &Path, vector: &DisagreementVector) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "id,agreement,disagreement")?;
    for (i, &a) in vector.agreement.iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            vector.conditions.id(i),
            fmt_exact(a),
            fmt_exact(1.0 - a)
        )?;
    }
    Ok(())
}

pub fn read_disagreement_csv(path: &Path, label: impl Into<String>) -> Result<DisagreementVector> {
    let reader = BufReader::new(File::open(path)?);
    let mut ids = Vec::new();
    let mut agreement = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::Invalid(format!(
                "{}:{}: expected id,agreement,disagreement",
                path.display(),
                lineno + 1
            )));
        }
        ids.push(cells[0].to_string());
        agreement.push(parse_f64(cells[1], "agreement")?);
    }
    Ok(DisagreementVector {
        label: label.into(),
        conditions: ConditionSet::new(ids)?,
        agreement,
        stat: crate::orders::RowStat::KendallA,
    })
}

// ---------------------------------------------------------------------------
// Report TSV: pair, coefficient, n, p_raw, p_bonferroni, n_tests, method

pub struct ReportRow {
    pub pair: String,
    pub coefficient: f64,
    pub n: usize,
    pub p_raw: f64,
    pub p_bonferroni: f64,
    pub n_tests: usize,
    pub method: String,
}

impl ReportRow {
    pub fn from_report(pair: impl Into<String>, report: &CorrelationReport) -> Self {
        ReportRow {
            pair: pair.into(),
            coefficient: report.coefficient,
            n: report.n,
            p_raw: report.p_raw,
            p_bonferroni: report.p_adjusted,
            n_tests: report.n_tests,
            method: report.method.to_string(),
        }
    }
}

pub fn write_report_tsv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "pair\tcoefficient\tn\tp_raw\tp_bonferroni\tn_tests\tmethod")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.pair,
            fmt_human(r.coefficient),
            r.n,
            fmt_p(r.p_raw),
            fmt_p(r.p_bonferroni),
            r.n_tests,
            r.method
        )?;
    }
    Ok(())
}

pub fn read_report_tsv(path: &Path) -> Result<Vec<ReportRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 7 {
            return Err(Error::Invalid(format!(
                "{}:{}: expected 7 tab-separated columns",
                path.display(),
                lineno + 1
            )));
        }
        out.push(ReportRow {
            pair: cells[0].to_string(),
            coefficient: parse_f64(cells[1], "coefficient")?,
            n: cells[2]
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad n `{}`", cells[2])))?,
            p_raw: parse_f64(cells[3], "p_raw")?,
            p_bonferroni: parse_f64(cells[4], "p_bonferroni")?,
            n_tests: cells[5]
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("bad n_tests `{}`", cells[5])))?,
            method: cells[6].to_string(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// RSM CSV (labels as header row/column, diagonal 1)

pub fn write_rsm_csv(path: &Path, rsm: &Rsm) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let k = rsm.k();
    let header: Vec<String> = std::iter::once(String::new())
        .chain(rsm.labels.iter().cloned())
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..k {
        let cells: Vec<String> = std::iter::once(rsm.labels[i].clone())
            .chain((0..k).map(|j| fmt_exact(rsm.get(i, j))))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Heatmap grid CSV: layer indices as header row/column, empty diagonal

pub fn write_heatmap_csv(path: &Path, grid: &[Vec<Option<f64>>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = grid.len();
    let header: Vec<String> = std::iter::once(String::new())
        .chain((1..=n).map(|i| i.to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, row) in grid.iter().enumerate() {
        let cells: Vec<String> = std::iter::once((i + 1).to_string())
            .chain(row.iter().map(|cell| match cell {
                Some(v) => fmt_exact(*v),
                None => String::new(),
            }))
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_heatmap_csv(path: &Path) -> Result<Vec<Vec<Option<f64>>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{}: empty file", path.display())))??;
    let n = header.split(',').count() - 1;
    let mut grid = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<Option<f64>> = line
            .split(',')
            .skip(1)
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(cell, "heatmap cell").map(Some)
                }
            })
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        grid.push(row);
    }
    if grid.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grid.len(),
        });
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// ANOVA output TSV: term table, blank line, group summary

pub fn write_anova_tsv(path: &Path, result: &GroupAnova) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "term\tss\tdf\tms\tf\tp")?;
    let table = &result.table;
    for term in table.terms.iter().chain(std::iter::once(&table.residual)) {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            term.name,
            fmt_human(term.ss),
            term.df,
            fmt_human(term.ms),
            term.f.map(fmt_human).unwrap_or_default(),
            term.p.map(fmt_p).unwrap_or_default()
        )?;
    }
    writeln!(
        w,
        "total\t{}\t{}\t\t\t",
        fmt_human(table.total_ss),
        table.total_df
    )?;
    for warning in &table.warnings {
        writeln!(w, "# warning: {warning}")?;
    }
    writeln!(w)?;
    writeln!(w, "group\tn\tmean\tstddev")?;
    for g in &result.groups {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            g.group,
            g.n,
            fmt_human(g.mean),
            fmt_human(g.stddev)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pair-values CSV for the ANOVA input: layer_i,layer_j,value

pub fn read_pair_values_csv(path: &Path) -> Result<Vec<((usize, usize), f64)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(Error::Invalid(format!(
                "{}:{}: expected layer_i,layer_j,value",
                path.display(),
                lineno + 1
            )));
        }
        let i: usize = cells[0]
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad layer index `{}`", cells[0])))?;
        let j: usize = cells[1]
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad layer index `{}`", cells[1])))?;
        out.push(((i, j), parse_f64(cells[2], "pair value")?));
    }
    Ok(out)
}

pub fn write_pair_values_csv(path: &Path, values: &[((usize, usize), f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "layer_i,layer_j,value")?;
    for &((i, j), v) in values {
        writeln!(w, "{i},{j},{}", fmt_exact(v))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Lexicon TSV: word<TAB>value

pub fn read_lexicon_tsv(path: &Path, case_fold: bool, oov_default: f64) -> Result<Lexicon> {
    let reader = BufReader::new(File::open(path)?);
    let mut map = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, value) = line.split_once('\t').ok_or_else(|| {
            Error::Invalid(format!(
                "{}:{}: expected word<TAB>value",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(word.to_string(), parse_f64(value, "lexicon value")?);
    }
    Lexicon::new(map, case_fold, oov_default)
}

// ---------------------------------------------------------------------------
// Tree file: one bracketed tree per line; ids are 1-based line numbers

pub fn read_trees(path: &Path) -> Result<Vec<(String, ParseTree)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tree = parse_bracketed(&line).map_err(|e| match e {
            Error::Parse { offset, message } => Error::Parse {
                offset,
                message: format!("{}:{}: {message}", path.display(), lineno + 1),
            },
            other => other,
        })?;
        out.push(((lineno + 1).to_string(), tree));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sentences TSV: id<TAB>space-separated words; without a tab the 1-based
// line number becomes the id

pub fn read_sentences(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = match line.split_once('\t') {
            Some((id, text)) => (id.to_string(), text),
            None => ((lineno + 1).to_string(), line.as_str()),
        };
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return Err(Error::EmptySentence);
        }
        out.push((id, words));
    }
    Ok(out)
}

/// Build a feature vector from per-condition (id, value) pairs, preserving
/// input order.
pub fn feature_from_pairs(
    pairs: Vec<(String, f64)>,
    name: impl Into<String>,
) -> Result<FeatureVector> {
    let (ids, values): (Vec<String>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(FeatureVector {
        conditions: ConditionSet::new(ids)?,
        name: name.into(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::build_rdm;
    use crate::rng;
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("rsa-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn activations_roundtrip() {
        let records = vec![TokenActivations {
            condition: "s1".into(),
            layer: LayerId::new("bert", 3),
            vectors: vec![vec![0.1, -2.5], vec![1.0 / 3.0, 7.25]],
        }];
        let path = tmp("acts.jsonl");
        write_activations_jsonl(&path, &records).unwrap();
        let back = read_activations_jsonl(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].condition, "s1");
        assert_eq!(back[0].layer, records[0].layer);
        assert_eq!(back[0].vectors, records[0].vectors);
    }

    #[test]
    fn rdm_csv_roundtrip_exact() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..5).map(|d| rng::gaussian(3, 0, i, d)).collect())
            .collect();
        let m = ActivityMatrix {
            conditions: ConditionSet::new((0..4).map(|i| format!("s{i}"))).unwrap(),
            layer: LayerId::new("m", 0),
            data: rows,
        };
        let rdm = build_rdm(&m, DissimilarityMeasure::Correlation, None).unwrap();
        let path = tmp("rdm.csv");
        write_rdm_csv(&path, &rdm).unwrap();
        let back = read_rdm_csv(&path, DissimilarityMeasure::Correlation).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(rdm.get(i, j), back.get(i, j), "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn feature_csv_roundtrip_exact() {
        let feature = FeatureVector {
            conditions: ConditionSet::new(["a", "b", "c"]).unwrap(),
            name: "f".into(),
            values: vec![1.0 / 3.0, -0.125, 250.75],
        };
        let path = tmp("feat.csv");
        write_feature_csv(&path, &feature).unwrap();
        let back = read_feature_csv(&path, "f").unwrap();
        assert_eq!(back.values, feature.values);
        assert_eq!(back.conditions.ids(), feature.conditions.ids());
    }

    #[test]
    fn fixation_csv_grouping() {
        let path = tmp("fix.csv");
        std::fs::write(
            &path,
            "id,word_index,word,participant,duration_ms,measure\n\
             s1,0,the,p1,200,total_fixation\n\
             s1,0,the,p2,400,total_fixation\n\
             s1,1,dog,p1,300,total_fixation\n\
             s1,1,dog,p2,100,total_fixation\n\
             s2,0,hi,p1,50,total_fixation\n",
        )
        .unwrap();
        let tables = read_fixations_csv(&path).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[0].condition, "s1");
        assert_eq!(tables[0].words, vec!["the", "dog"]);
        assert_eq!(tables[0].durations, vec![vec![200.0, 400.0], vec![300.0, 100.0]]);
        // participant p2 missing for s2: stored as 0
        assert_eq!(tables[1].durations, vec![vec![50.0, 0.0]]);
    }

    #[test]
    fn heatmap_roundtrip_exact() {
        let grid = vec![
            vec![None, Some(0.5), Some(1.0 / 3.0)],
            vec![Some(0.5), None, Some(-0.25)],
            vec![Some(1.0 / 3.0), Some(-0.25), None],
        ];
        let path = tmp("grid.csv");
        write_heatmap_csv(&path, &grid).unwrap();
        assert_eq!(read_heatmap_csv(&path).unwrap(), grid);
    }

    #[test]
    fn lexicon_tsv() {
        let path = tmp("lex.tsv");
        std::fs::write(&path, "the\t100\ndog\t25.5\n").unwrap();
        let lex = read_lexicon_tsv(&path, true, 0.0).unwrap();
        assert_eq!(lex.lookup("dog"), 25.5);
        assert_eq!(lex.lookup("missing"), 0.0);
    }
}
