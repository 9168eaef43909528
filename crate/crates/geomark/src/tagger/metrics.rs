//! Extraction metrics: entity-level precision/recall/F1, page-level
//! accuracy, and token-level per-tag F1 for the adaptive loss weights.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::tagger::scheme::{EntityType, LocationEntity, Tag, ENTITY_TYPES, TAG_COUNT};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("predicted and gold page sets differ (first mismatch: {0:?})")]
    PageMismatch(String),
}

/// Precision/recall/F1 for one slice of the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrfScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScores {
    fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let precision = if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if gold == 0 { 0.0 } else { tp as f64 / gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// Metrics for one entity type, including page-level accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeMetrics {
    pub scores: PrfScores,
    pub page_accuracy: f64,
}

/// Full evaluation result over a page set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionMetrics {
    pub per_type: BTreeMap<EntityType, TypeMetrics>,
    pub all_types: PrfScores,
    /// Fraction of pages where every type was extracted exactly.
    pub full_info_accuracy: f64,
    pub pages: usize,
}

impl ExtractionMetrics {
    pub fn type_f1(&self, ty: EntityType) -> f64 {
        self.per_type[&ty].scores.f1
    }
}

/// Page-level accuracy: successful pages over total pages.
pub fn page_accuracy(successful: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        successful as f64 / total as f64
    }
}

type EntityKey = (EntityType, usize, usize);

fn key_set(entities: &[LocationEntity]) -> BTreeSet<EntityKey> {
    entities
        .iter()
        .map(|e| (e.entity_type, e.token_range.start, e.token_range.end))
        .collect()
}

/// Compare predicted against gold entities page by page. A true positive is
/// an exact span-and-type match; a page counts as full-info successful only
/// when every type's entity set is reproduced exactly.
pub fn compute_metrics(
    predicted: &[(String, Vec<LocationEntity>)],
    gold: &[(String, Vec<LocationEntity>)],
) -> Result<ExtractionMetrics, MetricsError> {
    let pred_map: BTreeMap<&str, &Vec<LocationEntity>> = predicted
        .iter()
        .map(|(id, e)| (id.as_str(), e))
        .collect();
    let gold_map: BTreeMap<&str, &Vec<LocationEntity>> =
        gold.iter().map(|(id, e)| (id.as_str(), e)).collect();
    if pred_map.len() != predicted.len() || gold_map.len() != gold.len() {
        return Err(MetricsError::PageMismatch("duplicate page id".to_string()));
    }
    for id in pred_map.keys() {
        if !gold_map.contains_key(id) {
            return Err(MetricsError::PageMismatch((*id).to_string()));
        }
    }
    for id in gold_map.keys() {
        if !pred_map.contains_key(id) {
            return Err(MetricsError::PageMismatch((*id).to_string()));
        }
    }

    let mut tp: BTreeMap<EntityType, usize> = BTreeMap::new();
    let mut pred_count: BTreeMap<EntityType, usize> = BTreeMap::new();
    let mut gold_count: BTreeMap<EntityType, usize> = BTreeMap::new();
    let mut page_success: BTreeMap<EntityType, usize> = BTreeMap::new();
    let mut full_info_success = 0usize;
    let total = gold_map.len();

    for (id, gold_entities) in &gold_map {
        let pred_entities = pred_map[id];
        let pred_keys = key_set(pred_entities);
        let gold_keys = key_set(gold_entities);
        let mut page_ok = true;
        for ty in ENTITY_TYPES {
            let p: BTreeSet<&EntityKey> = pred_keys.iter().filter(|k| k.0 == ty).collect();
            let g: BTreeSet<&EntityKey> = gold_keys.iter().filter(|k| k.0 == ty).collect();
            *tp.entry(ty).or_default() += p.intersection(&g).count();
            *pred_count.entry(ty).or_default() += p.len();
            *gold_count.entry(ty).or_default() += g.len();
            if p == g {
                *page_success.entry(ty).or_default() += 1;
            } else {
                page_ok = false;
            }
        }
        if page_ok {
            full_info_success += 1;
        }
    }

    let mut per_type = BTreeMap::new();
    let (mut tp_all, mut pred_all, mut gold_all) = (0usize, 0usize, 0usize);
    for ty in ENTITY_TYPES {
        let t = tp.get(&ty).copied().unwrap_or(0);
        let p = pred_count.get(&ty).copied().unwrap_or(0);
        let g = gold_count.get(&ty).copied().unwrap_or(0);
        tp_all += t;
        pred_all += p;
        gold_all += g;
        per_type.insert(
            ty,
            TypeMetrics {
                scores: PrfScores::from_counts(t, p, g),
                page_accuracy: page_accuracy(page_success.get(&ty).copied().unwrap_or(0), total),
            },
        );
    }

    Ok(ExtractionMetrics {
        per_type,
        all_types: PrfScores::from_counts(tp_all, pred_all, gold_all),
        full_info_accuracy: page_accuracy(full_info_success, total),
        pages: total,
    })
}

/// Token-level F1 per tag over (predicted, gold) tag sequences, plus a flag
/// telling whether each tag has gold support. Undefined scores report 0.
pub fn per_tag_f1(pages: &[(Vec<Tag>, Vec<Tag>)]) -> (Vec<f64>, Vec<bool>) {
    let mut tp = vec![0usize; TAG_COUNT];
    let mut pred = vec![0usize; TAG_COUNT];
    let mut gold = vec![0usize; TAG_COUNT];
    for (pred_tags, gold_tags) in pages {
        for (p, g) in pred_tags.iter().zip(gold_tags) {
            pred[p.index()] += 1;
            gold[g.index()] += 1;
            if p == g {
                tp[p.index()] += 1;
            }
        }
    }
    let f1: Vec<f64> = (0..TAG_COUNT)
        .map(|i| PrfScores::from_counts(tp[i], pred[i], gold[i]).f1)
        .collect();
    let support: Vec<bool> = gold.iter().map(|&g| g > 0).collect();
    (f1, support)
}

/// Delimited metrics report: one row per entity type plus the aggregate
/// rows, in the order all types / per type / full info.
pub fn format_metrics_table(m: &ExtractionMetrics) -> String {
    fn fmt(v: f64) -> String {
        format!("{v:.4}")
    }
    let mut out = String::from("result\tprec\trec\tf1\tacc\n");
    out.push_str(&format!(
        "all_types\t{}\t{}\t{}\t-\n",
        fmt(m.all_types.precision),
        fmt(m.all_types.recall),
        fmt(m.all_types.f1)
    ));
    for ty in ENTITY_TYPES {
        let t = &m.per_type[&ty];
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            ty.code(),
            fmt(t.scores.precision),
            fmt(t.scores.recall),
            fmt(t.scores.f1),
            fmt(t.page_accuracy)
        ));
    }
    out.push_str(&format!(
        "full_info\t-\t-\t-\t{}\n",
        fmt(m.full_info_accuracy)
    ));
    out
}
