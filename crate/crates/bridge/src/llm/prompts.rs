use std::fs;
use std::path::Path;

/// Placeholders a template may reference.
pub const PLACEHOLDERS: [&str; 5] = ["source_schema", "target_schema", "mismatch_report", "mapping", "data"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    DetectMismatch,
    GenerateMapping,
    GenerateAdapter,
    TransformData,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::DetectMismatch,
        PromptKind::GenerateMapping,
        PromptKind::GenerateAdapter,
        PromptKind::TransformData,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            PromptKind::DetectMismatch => "detect_mismatch.txt",
            PromptKind::GenerateMapping => "generate_mapping.txt",
            PromptKind::GenerateAdapter => "generate_adapter.txt",
            PromptKind::TransformData => "transform_data.txt",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("missing prompt file {0}")]
    MissingPrompt(String),
    #[error("reading {file}: {message}")]
    Io { file: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{template}: no value for placeholder {{{placeholder}}}")]
pub struct RenderError {
    pub template: String,
    pub placeholder: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: [String; 4],
}

impl PromptSet {
    /// Loads the four template files from `dir`.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let mut templates: [String; 4] = Default::default();
        for kind in PromptKind::ALL {
            let path = dir.join(kind.file_name());
            templates[kind.index()] = match fs::read_to_string(&path) {
                Ok(text) => text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(PromptError::MissingPrompt(kind.file_name().into()))
                }
                Err(e) => return Err(PromptError::Io { file: path.display().to_string(), message: e.to_string() }),
            };
        }
        Ok(Self { templates })
    }

    /// The templates shipped in the repository's `prompts/` directory.
    pub fn builtin() -> Self {
        Self {
            templates: [
                include_str!("../../../../prompts/detect_mismatch.txt").into(),
                include_str!("../../../../prompts/generate_mapping.txt").into(),
                include_str!("../../../../prompts/generate_adapter.txt").into(),
                include_str!("../../../../prompts/transform_data.txt").into(),
            ],
        }
    }

    pub fn from_templates(templates: [String; 4]) -> Self {
        Self { templates }
    }

    pub fn template(&self, kind: PromptKind) -> &str {
        &self.templates[kind.index()]
    }

    /// Substitutes `{name}` placeholders. Braces around anything other than
    /// a lowercase identifier are literal text; an identifier with no value
    /// in `vars` is an error.
    pub fn render(&self, kind: PromptKind, vars: &[(&str, &str)]) -> Result<String, RenderError> {
        let text = self.template(kind);
        let mut out = String::with_capacity(text.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
        let mut rest = text;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let ident_len = after.bytes().take_while(|b| b.is_ascii_lowercase() || *b == b'_').count();
            if ident_len > 0 && after[ident_len..].starts_with('}') {
                let name = &after[..ident_len];
                let value = vars
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| RenderError { template: kind.file_name().into(), placeholder: name.into() })?;
                out.push_str(value);
                rest = &after[ident_len + 1..];
            } else {
                out.push('{');
                rest = after;
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}
