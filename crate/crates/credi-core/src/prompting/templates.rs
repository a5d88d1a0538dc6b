//! Built-in instruction templates.
//!
//! A template is plain text with three placeholders: `{CANDIDATE_LABELS}`
//! in the instruction part, then `{DIALOGUE}` and `{TARGET_PAIR}` in the
//! per-example block part. The block part starts at the line containing
//! `{DIALOGUE}`; everything above it is rendered once as the instruction,
//! everything from there on is repeated for each exemplar and the query.

use crate::dialogue::Locale;

pub const DEFAULT_TEMPLATE_ZH: &str = "\
你将看到小说中的一段对话。请判断目标人物对（subject -> object）中 subject 对 object 的关系。
候选标签：{CANDIDATE_LABELS}
只输出一行答案，形如 key=value，多个键之间用分号分隔，值必须取自候选标签。

DIALOGUE: {DIALOGUE}
TARGET: {TARGET_PAIR}";

pub const DEFAULT_TEMPLATE_EN: &str = "\
You will read a dialogue excerpt from a novel. Judge the relationship of subject toward object for the target pair (subject -> object).
Candidate labels: {CANDIDATE_LABELS}
Answer with a single line of key=value pairs separated by semicolons, using only the candidate labels.

DIALOGUE: {DIALOGUE}
TARGET: {TARGET_PAIR}";

pub fn default_template(locale: Locale) -> &'static str {
    match locale {
        Locale::Zh => DEFAULT_TEMPLATE_ZH,
        Locale::En => DEFAULT_TEMPLATE_EN,
    }
}
