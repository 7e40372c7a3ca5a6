use std::collections::BTreeMap;

const DEFAULT_TABLE: &str = include_str!("../../resources/puddle_languages.tsv");

/// Code used for puddles missing from the table (ISO 639-2 "sign languages").
pub const FALLBACK_SIGNED: &str = "sgn";

/// Puddle id to signed-language code, for source-side language tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageTable {
    signed: BTreeMap<u32, String>,
    fallback: String,
}

impl Default for LanguageTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("shipped language table is valid")
    }
}

impl LanguageTable {
    /// Reads `puddle_id<TAB>code[<TAB>description]` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut signed = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let id = cols
                .next()
                .and_then(|c| c.trim().parse::<u32>().ok())
                .ok_or_else(|| format!("line {}: bad puddle id", i + 1))?;
            let code = cols
                .next()
                .map(str::trim)
                .filter(|c| !c.is_empty() && !c.contains(char::is_whitespace))
                .ok_or_else(|| format!("line {}: missing language code", i + 1))?;
            signed.insert(id, code.to_string());
        }
        Ok(Self {
            signed,
            fallback: FALLBACK_SIGNED.to_string(),
        })
    }

    pub fn signed_language(&self, puddle_id: u32) -> &str {
        self.signed.get(&puddle_id).unwrap_or(&self.fallback)
    }

    /// Stable textual form, used when fingerprinting a configuration.
    pub fn canonical(&self) -> String {
        self.signed
            .iter()
            .map(|(id, code)| format!("{id}\t{code}\n"))
            .collect()
    }
}
