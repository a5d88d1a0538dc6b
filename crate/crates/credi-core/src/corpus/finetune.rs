//! Fine-tuning data export.
//!
//! Each gold instance becomes one JSONL record {"instruction", "input",
//! "output"}: the zero-shot prompt split into its instruction and query
//! parts, and the canonical answer line as the target.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::prompting::{build_prompt, AnswerLine, PromptConfig};

use super::{CorpusError, Dataset};

#[derive(Debug, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// Writes one record per instance; every instance must carry gold labels.
/// Returns the record count.
pub fn export_finetune_file(
    ds: &Dataset,
    prompt_cfg: &PromptConfig,
    path: impl AsRef<Path>,
) -> Result<usize, CorpusError> {
    let cfg = prompt_cfg.zero_shot();
    cfg.validate()?;
    let mut out = File::create(path.as_ref())?;
    let mut count = 0;
    for inst in &ds.instances {
        let gold = inst.gold.ok_or_else(|| CorpusError::MissingGold(inst.id.clone()))?;
        let unit = ds.units.get(&inst.unit_id).ok_or_else(|| CorpusError::DanglingReference {
            instance_id: inst.id.clone(),
            unit_id: inst.unit_id.clone(),
        })?;
        let spec = build_prompt(inst, unit, &cfg, Vec::new())?;
        let record = FinetuneRecord {
            instruction: spec.instruction.clone(),
            input: {
                let rendered = spec.render();
                // The render is instruction + "\n\n" + query block; the
                // remainder after the instruction is the input.
                rendered[spec.instruction.len()..].trim_start_matches('\n').to_string()
            },
            output: AnswerLine::for_mode(&gold, cfg.mode).render(),
        };
        let json = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{json}")?;
        count += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use std::io::BufRead;

    use crate::corpus::tests::{gold, instance, unit};
    use crate::corpus::{Dataset, Hierarchy, Polarity, RelType};
    use crate::dialogue::{DialogueVariant, Locale};
    use crate::prompting::{parse_response, PromptMode};

    use super::*;

    fn dataset(n: usize) -> Dataset {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let instances = (0..n)
            .map(|i| {
                instance(
                    &format!("r{i}"),
                    "u1",
                    "甲",
                    "乙",
                    gold(Polarity::Positive, RelType::Kinship, Hierarchy::Junior),
                )
            })
            .collect();
        Dataset::from_parts(units, instances).unwrap()
    }

    fn cfg() -> PromptConfig {
        PromptConfig::new(PromptMode::Joint, DialogueVariant::Expanded, 3, Locale::Zh)
    }

    fn read_records(path: &std::path::Path) -> Vec<FinetuneRecord> {
        let file = std::fs::File::open(path).unwrap();
        std::io::BufReader::new(file)
            .lines()
            .map(|l| serde_json::from_str(&l.unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn one_record_per_instance() {
        let ds = dataset(7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        let count = export_finetune_file(&ds, &cfg(), &path).unwrap();
        assert_eq!(count, 7);
        assert_eq!(read_records(&path).len(), 7);
    }

    #[test]
    fn empty_dataset_writes_a_valid_empty_file() {
        let ds = Dataset::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        assert_eq!(export_finetune_file(&ds, &cfg(), &path).unwrap(), 0);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn outputs_round_trip_through_the_parser() {
        let ds = dataset(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        export_finetune_file(&ds, &cfg(), &path).unwrap();
        for (record, inst) in read_records(&path).iter().zip(&ds.instances) {
            let parsed = parse_response(&record.output, PromptMode::Joint).unwrap();
            assert_eq!(parsed, inst.gold.unwrap().to_map());
        }
    }

    #[test]
    fn instruction_plus_input_is_the_zero_shot_prompt() {
        let ds = dataset(1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        export_finetune_file(&ds, &cfg(), &path).unwrap();
        let record = &read_records(&path)[0];
        let inst = &ds.instances[0];
        let rendered = crate::prompting::render_prompt(
            inst,
            ds.units.get("u1").unwrap(),
            &cfg().zero_shot(),
            vec![],
        )
        .unwrap();
        assert_eq!(format!("{}\n\n{}", record.instruction, record.input), rendered);
        assert!(record.input.ends_with("ANSWER:"));
    }

    #[test]
    fn missing_gold_aborts() {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let instances = vec![instance("r1", "u1", "甲", "乙", None)];
        let ds = Dataset::from_parts(units, instances).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        match export_finetune_file(&ds, &cfg(), &path) {
            Err(CorpusError::MissingGold(id)) => assert_eq!(id, "r1"),
            other => panic!("expected MissingGold, got {other:?}"),
        }
    }
}
