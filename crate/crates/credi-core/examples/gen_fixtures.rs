//! Regenerates the bundled corpus fixture deterministically.
//!
//! Usage: cargo run -p credi-core --example gen_fixtures [out_dir]
//!
//! The fixture is 20 dialogue units with 50 gold instances over a
//! ten-character roster. Label distribution is fixed: polarity
//! 29/16/5 (positive/negative/neutral), rel_type 20/20/10
//! (kinship/affiliative/other), hierarchy 25/15/10 (peer/senior/junior).

use credi_core::corpus::{
    save_dataset, Dataset, DialogueUnit, Hierarchy, LabelSet, Polarity, Quote, RelType,
    RelationInstance,
};

const ROSTER: [&str; 10] = [
    "沈青崖", "陆明霞", "韩铁心", "苏挽月", "程远桥", "白云岫", "孟秋棠", "裴惊鸿", "温子然",
    "霍长青",
];

const NARRATIONS: [&str; 6] = [
    "暮色四合，堂中烛火摇晃。",
    "山道尽头，风雪卷了一地。",
    "庭前古松之下，二人对坐无言。",
    "更鼓三响，廊下脚步声渐近。",
    "江畔夜雾未散，渡船迟迟不来。",
    "演武场上尘土未定。",
];

const UTTERANCES: [&str; 12] = [
    "师兄此去凶多吉少，还请三思。",
    "此事与你无关，退下吧。",
    "北崖的雪，比往年更冷了。",
    "家父临终前曾提起过你。",
    "这杯茶，敬你我十年同门。",
    "若非看在师尊面上，今日断不轻饶。",
    "前辈指点之恩，晚辈没齿难忘。",
    "明日卯时，后山一决高下。",
    "妹妹何苦如此执拗。",
    "掌门有令，任何人不得擅离。",
    "此物还你，从此两不相欠。",
    "夜深了，早些回去歇着。",
];

const VERBS: [&str; 4] = ["道", "说道", "沉声道", "冷冷道"];

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Exact-count label sequence, mixed by a stride coprime with the length
/// so the three dimensions do not align.
fn spread<T: Copy>(counts: &[(T, usize)], stride: usize, offset: usize) -> Vec<T> {
    let flat: Vec<T> =
        counts.iter().flat_map(|(v, c)| std::iter::repeat_n(*v, *c)).collect();
    let n = flat.len();
    assert_eq!(gcd(stride, n), 1, "stride must be coprime with {n}");
    let mut out = vec![flat[0]; n];
    for (i, item) in flat.into_iter().enumerate() {
        out[(i * stride + offset) % n] = item;
    }
    out
}

fn build_unit(unit_no: usize, speakers: &[&str]) -> DialogueUnit {
    let mut context = String::from(NARRATIONS[unit_no % NARRATIONS.len()]);
    let mut quotes = Vec::new();
    let quote_count = 2 + unit_no % 2;
    for q in 0..quote_count {
        let speaker = speakers[q % speakers.len()];
        let addressee = speakers[(q + 1) % speakers.len()];
        let utterance = UTTERANCES[(unit_no * 3 + q * 5) % UTTERANCES.len()].to_string();
        context.push('\n');
        context.push_str(speaker);
        context.push_str(VERBS[(unit_no + q) % VERBS.len()]);
        context.push('：');
        context.push('“');
        let start = context.len();
        context.push_str(&utterance);
        let end = context.len();
        context.push('”');
        quotes.push(Quote {
            speaker: speaker.to_string(),
            addressee: Some(addressee.to_string()),
            utterance,
            span: (start, end),
        });
    }
    DialogueUnit {
        id: format!("qingshan-u{:04}", unit_no + 1),
        novel_id: "qingshan".to_string(),
        context,
        quotes,
    }
}

fn main() {
    let out_dir = std::env::args().nth(1).unwrap_or_else(|| "fixtures".to_string());
    std::fs::create_dir_all(&out_dir).expect("create output directory");

    let polarity = spread(
        &[(Polarity::Positive, 29), (Polarity::Negative, 16), (Polarity::Neutral, 5)],
        7,
        0,
    );
    let rel_type = spread(
        &[(RelType::Kinship, 20), (RelType::Affiliative, 20), (RelType::Other, 10)],
        11,
        3,
    );
    let hierarchy = spread(
        &[(Hierarchy::Peer, 25), (Hierarchy::Senior, 15), (Hierarchy::Junior, 10)],
        13,
        5,
    );

    let mut units = Vec::new();
    let mut instances = Vec::new();
    let mut inst_no = 0usize;
    for unit_no in 0..20 {
        let a = ROSTER[unit_no % 10];
        let b = ROSTER[(unit_no + 1 + unit_no / 10) % 10];
        let c = ROSTER[(unit_no + 4) % 10];
        let unit = build_unit(unit_no, &[a, b]);
        // First ten units carry three instances, the rest two; the reversed
        // (b, a) pair exercises the undirected network fold.
        let mut pairs = vec![(a, b), (b, a)];
        if unit_no < 10 {
            pairs.push((b, c));
        }
        for (subject, object) in pairs {
            instances.push(RelationInstance {
                id: format!("qingshan-r{:03}", inst_no + 1),
                unit_id: unit.id.clone(),
                subject: subject.to_string(),
                object: object.to_string(),
                gold: Some(LabelSet::new(
                    polarity[inst_no],
                    rel_type[inst_no],
                    hierarchy[inst_no],
                )),
                predicted: None,
            });
            inst_no += 1;
        }
        units.push(unit);
    }
    assert_eq!(inst_no, 50);

    let dataset = Dataset::from_parts(units, instances).expect("fixture is valid");
    let corpus_path = format!("{out_dir}/corpus_small.jsonl");
    save_dataset(&dataset, &corpus_path).expect("write corpus fixture");

    let roles_path = format!("{out_dir}/roles.json");
    std::fs::write(
        &roles_path,
        "{\n  \"沈青崖\": \"protagonist\",\n  \"霍长青\": \"antagonist\"\n}\n",
    )
    .expect("write roles fixture");

    println!(
        "wrote {corpus_path} ({} units, {} instances) and {roles_path}",
        dataset.units.len(),
        dataset.instances.len()
    );
}
