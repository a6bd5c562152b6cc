//! Annotation prompt construction. The prompt is a pure function of the
//! corpus record and the AU table, so offline fixtures can be keyed by a
//! hash of the prompt text.

use crate::facs::AuBlendshapeMap;
use crate::scalar::Scalar;
use crate::tead::CorpusRecord;

/// Build the annotation request for one transcript. The text embeds the
/// transcript verbatim exactly once, lists all 36 AU labels in table order,
/// and mandates a machine-readable fenced JSON reply.
pub fn build_annotation_prompt<T: Scalar>(
    record: &CorpusRecord,
    au_table: &AuBlendshapeMap<T>,
) -> String {
    let mut au_list = String::new();
    for (i, name) in au_table.au_names().iter().enumerate() {
        au_list.push_str(&format!("{:>2}. {}\n", i + 1, name));
    }
    format!(
        "You are an expert in facial expression analysis using the Facial Action \
Coding System (FACS).\n\
\n\
Given the emotional transcript below, do three things:\n\
1. Infer 3 to 5 lowercase emotion tags describing how the speaker feels.\n\
2. Imagine the speaker's facial expression and mark each of the 36 Action \
Units below as activated (1) or not (0).\n\
3. Write one sentence describing a situation that could evoke this emotion.\n\
\n\
Action Units, in order:\n\
{au_list}\
\n\
Transcript:\n\
\"\"\"\n\
{transcript}\n\
\"\"\"\n\
\n\
Reply with ONLY a fenced JSON block in exactly this shape:\n\
```json\n\
{{\"tags\": [\"tag1\", \"tag2\", \"tag3\"], \"aus\": [0,1,0,...], \"situation\": \"One sentence.\"}}\n\
```\n\
The \"aus\" array must contain exactly 36 entries, each 0 or 1, in the Action \
Unit order listed above. Do not add any text outside the fenced block.\n",
        transcript = record.transcript,
    )
}
