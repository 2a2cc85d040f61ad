//! Chat scripts for listwise and pairwise ranking requests.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::RerankError;
use crate::model::{Document, Modality, Query};

const TEXT_SYSTEM: &str =
    "You are RankGPT, an intelligent assistant that can rank passages based on their relevancy to the query.";
const TEXT_ACK: &str = "Okay, please provide the passages.";
const MM_SYSTEM: &str = "You are a multimodal reranking assistant. Rank documents containing both text and images based on their relevance to the query.";
const MM_ACK: &str = "Understood. Please provide the documents.";
const PAIR_SYSTEM: &str = "You are an expert relevance assessor for multimodal documents. Determine whether the given document is relevant to the user query.";

pub(crate) const LISTWISE_REMINDER: &str =
    "Your previous answer could not be read. Respond only with the ranking in the format [] > [], e.g., [1] > [2].";
pub(crate) const PAIRWISE_REMINDER: &str = "Answer only 'Yes' or 'No'.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    /// Opaque image references attached to this turn (user turns only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<String>,
}

impl Turn {
    fn system(text: impl Into<String>) -> Self {
        Turn {
            role: Role::System,
            text: text.into(),
            images: Vec::new(),
        }
    }

    fn user(text: impl Into<String>) -> Self {
        Turn {
            role: Role::User,
            text: text.into(),
            images: Vec::new(),
        }
    }

    fn assistant(text: impl Into<String>) -> Self {
        Turn {
            role: Role::Assistant,
            text: text.into(),
            images: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    #[default]
    Text,
    Multimodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Listwise,
    Pairwise,
}

/// What the script is about. Never rendered into the conversation; mock
/// backends use it to answer without reading the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContext {
    pub kind: PromptKind,
    pub query_id: String,
    /// Documents in the order they are numbered in the script.
    pub doc_ids: Vec<String>,
}

/// A system turn followed by alternating user/assistant turns, ending on a
/// user turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptScript {
    turns: Vec<Turn>,
    context: PromptContext,
}

impl PromptScript {
    fn new(turns: Vec<Turn>, context: PromptContext) -> Self {
        let script = PromptScript { turns, context };
        debug_assert!(script.is_well_formed());
        script
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn context(&self) -> &PromptContext {
        &self.context
    }

    pub fn has_images(&self) -> bool {
        self.turns.iter().any(|t| !t.images.is_empty())
    }

    /// Appends the rejected answer and a reminder, keeping the alternation.
    pub fn with_reminder(&self, previous_answer: &str, reminder: &str) -> PromptScript {
        let mut turns = self.turns.clone();
        turns.push(Turn::assistant(previous_answer));
        turns.push(Turn::user(reminder));
        PromptScript::new(turns, self.context.clone())
    }

    pub fn is_well_formed(&self) -> bool {
        let Some((first, rest)) = self.turns.split_first() else {
            return false;
        };
        if first.role != Role::System || !first.images.is_empty() {
            return false;
        }
        let alternates = rest.iter().enumerate().all(|(i, t)| {
            let expected = if i % 2 == 0 {
                Role::User
            } else {
                Role::Assistant
            };
            t.role == expected && (t.images.is_empty() || t.role == Role::User)
        });
        alternates && rest.len() % 2 == 1
    }
}

fn missing(doc: &Document, what: &'static str) -> RerankError {
    RerankError::MissingModality {
        id: doc.id.clone(),
        missing: what,
    }
}

fn check_declared(doc: &Document) -> Result<(), RerankError> {
    let needs_image = matches!(doc.modality, Modality::Image | Modality::Hybrid);
    let needs_text = matches!(doc.modality, Modality::Text | Modality::Hybrid);
    if needs_image && doc.image_ref.is_none() {
        return Err(missing(doc, "image_ref"));
    }
    if needs_text && doc.text.is_none() {
        return Err(missing(doc, "text"));
    }
    if doc.text.is_none() && doc.image_ref.is_none() {
        return Err(missing(doc, "text or image_ref"));
    }
    Ok(())
}

/// Multi-turn listwise ranking script for `docs`, numbered from 1.
///
/// Text mode requires every document to carry text. Multimodal mode renders
/// each document by what it has, so mixed text/image/hybrid lists are
/// accepted as long as every document matches its declared modality.
pub fn build_listwise_prompt(
    query: &Query,
    docs: &[&Document],
    mode: PromptMode,
) -> Result<PromptScript, RerankError> {
    let n = docs.len();
    if n < 2 {
        return Err(RerankError::TooFewDocs(n));
    }
    let q = &query.text;
    let mut turns = Vec::with_capacity(4 + 2 * n);
    match mode {
        PromptMode::Text => {
            turns.push(Turn::system(TEXT_SYSTEM));
            turns.push(Turn::user(format!(
                "I will provide you with {n} passages, each indicated by number identifier []. Rank the passages based on their relevance to query: {q}."
            )));
            turns.push(Turn::assistant(TEXT_ACK));
            for (i, doc) in docs.iter().enumerate() {
                let text = doc.text.as_deref().ok_or_else(|| missing(doc, "text"))?;
                let i = i + 1;
                turns.push(Turn::user(format!("[{i}] {text}")));
                turns.push(Turn::assistant(format!("Received passage [{i}].")));
            }
            turns.push(Turn::user(format!(
                "Search Query: {q}. Rank the {n} passages above based on their relevance. The output format should be [] > [], e.g., [1] > [2]. Only response the ranking results, do not say any word or explain."
            )));
        }
        PromptMode::Multimodal => {
            turns.push(Turn::system(MM_SYSTEM));
            turns.push(Turn::user(format!(
                "I will provide you with {n} multimodal documents, each containing text and images. Rank them by relevance to query: {q}."
            )));
            turns.push(Turn::assistant(MM_ACK));
            for (i, doc) in docs.iter().enumerate() {
                check_declared(doc)?;
                let i = i + 1;
                let mut body = format!("[{i}]");
                if let Some(text) = &doc.text {
                    body.push_str(" Text: ");
                    body.push_str(text);
                }
                let mut turn = Turn::user(String::new());
                if let Some(image) = &doc.image_ref {
                    if doc.text.is_some() {
                        body.push('\n');
                    } else {
                        body.push(' ');
                    }
                    body.push_str(&format!("Image: [Attached image_{i}]"));
                    turn.images.push(image.clone());
                }
                turn.text = body;
                turns.push(turn);
                turns.push(Turn::assistant(format!("Received document [{i}].")));
            }
            turns.push(Turn::user(format!(
                "Query: {q}. Rank the {n} documents considering both textual and visual content. Output format: [] > [], e.g., [1] > [2]. Only provide the ranking, no explanation."
            )));
        }
    }
    Ok(PromptScript::new(
        turns,
        PromptContext {
            kind: PromptKind::Listwise,
            query_id: query.id.clone(),
            doc_ids: docs.iter().map(|d| d.id.clone()).collect(),
        },
    ))
}

/// Yes/no relevance script for a single document. Absent text or image lines
/// are left out.
pub fn build_pairwise_prompt(query: &Query, doc: &Document) -> Result<PromptScript, RerankError> {
    check_declared(doc)?;
    let mut body = format!("Query: {}", query.text);
    if let Some(text) = doc.text.as_deref().filter(|t| !t.is_empty()) {
        body.push_str("\nDocument Text: ");
        body.push_str(text);
    }
    let mut user = Turn::user(String::new());
    if let Some(image) = &doc.image_ref {
        body.push_str("\nDocument Image: [Attached]");
        user.images.push(image.clone());
    }
    body.push_str("\nIs this document relevant to the query? Answer only 'Yes' or 'No'.");
    user.text = body;
    Ok(PromptScript::new(
        vec![Turn::system(PAIR_SYSTEM), user],
        PromptContext {
            kind: PromptKind::Pairwise,
            query_id: query.id.clone(),
            doc_ids: vec![doc.id.clone()],
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Query {
        Query::new("q1", "What is deep learning?")
    }

    #[test]
    fn text_listwise_turn_structure() {
        let docs = [
            Document::text("a", "Machine learning is a subset of AI..."),
            Document::text("b", "Deep learning uses neural networks..."),
            Document::text("c", "Python is a programming language..."),
        ];
        let refs: Vec<&Document> = docs.iter().collect();
        let p = build_listwise_prompt(&q(), &refs, PromptMode::Text).unwrap();
        let t = p.turns();
        // system, announce, acknowledgement, 3 x (passage, receipt), final
        assert_eq!(t.len(), 10);
        assert!(p.is_well_formed());
        assert_eq!(t[0].text, TEXT_SYSTEM);
        assert_eq!(
            t[1].text,
            "I will provide you with 3 passages, each indicated by number identifier []. Rank the passages based on their relevance to query: What is deep learning?."
        );
        assert_eq!(t[2].text, "Okay, please provide the passages.");
        assert_eq!(t[5].text, "[2] Deep learning uses neural networks...");
        assert_eq!(t[6].text, "Received passage [2].");
        assert!(t[9]
            .text
            .ends_with("Only response the ranking results, do not say any word or explain."));
        assert!(t[9]
            .text
            .contains("The output format should be [] > [], e.g., [1] > [2]."));
        assert_eq!(p.context().doc_ids, ["a", "b", "c"]);
    }

    #[test]
    fn multimodal_listwise_attaches_images() {
        let docs = [
            Document::hybrid("a", "Transformers use attention...", "img/a.png"),
            Document::hybrid("b", "BERT is a language model...", "img/b.png"),
        ];
        let refs: Vec<&Document> = docs.iter().collect();
        let p = build_listwise_prompt(&q(), &refs, PromptMode::Multimodal).unwrap();
        let t = p.turns();
        assert_eq!(t.len(), 8);
        assert_eq!(
            t[3].text,
            "[1] Text: Transformers use attention...\nImage: [Attached image_1]"
        );
        assert_eq!(t[3].images, ["img/a.png"]);
        assert_eq!(t[4].text, "Received document [1].");
        assert!(t[1].text.contains("2 multimodal documents"));
        assert!(t[7]
            .text
            .starts_with("Query: What is deep learning?. Rank the 2 documents"));
        assert!(p.has_images());
    }

    #[test]
    fn mixed_lists_render_by_content() {
        let docs = [Document::text("a", "plain"), Document::image("b", "b.jpg")];
        let refs: Vec<&Document> = docs.iter().collect();
        let p = build_listwise_prompt(&q(), &refs, PromptMode::Multimodal).unwrap();
        assert_eq!(p.turns()[3].text, "[1] Text: plain");
        assert_eq!(p.turns()[5].text, "[2] Image: [Attached image_2]");
    }

    #[test]
    fn listwise_errors() {
        let one = [Document::text("a", "x")];
        let refs: Vec<&Document> = one.iter().collect();
        assert_eq!(
            build_listwise_prompt(&q(), &refs, PromptMode::Text),
            Err(RerankError::TooFewDocs(1))
        );
        let mut bad = Document::hybrid("h", "x", "y");
        bad.image_ref = None;
        let other = Document::text("t", "x");
        assert!(matches!(
            build_listwise_prompt(&q(), &[&bad, &other], PromptMode::Multimodal),
            Err(RerankError::MissingModality { .. })
        ));
        let img = Document::image("i", "i.png");
        assert!(matches!(
            build_listwise_prompt(&q(), &[&img, &other], PromptMode::Text),
            Err(RerankError::MissingModality { .. })
        ));
    }

    #[test]
    fn pairwise_templates() {
        let p = build_pairwise_prompt(&q(), &Document::text("a", "some text")).unwrap();
        assert_eq!(p.turns().len(), 2);
        assert_eq!(
            p.turns()[1].text,
            "Query: What is deep learning?\nDocument Text: some text\nIs this document relevant to the query? Answer only 'Yes' or 'No'."
        );
        let h = build_pairwise_prompt(&q(), &Document::hybrid("h", "chart", "c.png")).unwrap();
        assert!(h.turns()[1]
            .text
            .contains("Document Text: chart\nDocument Image: [Attached]"));
        assert_eq!(h.turns()[1].images, ["c.png"]);
        let mut img = Document::image("i", "i.png");
        img.text = Some(String::new());
        let i = build_pairwise_prompt(&q(), &img).unwrap();
        assert!(!i.turns()[1].text.contains("Document Text"));
        assert!(i.turns()[1].text.contains("Document Image: [Attached]"));
    }

    #[test]
    fn reminder_keeps_alternation() {
        let p = build_pairwise_prompt(&q(), &Document::text("a", "x")).unwrap();
        let r = p.with_reminder("maybe", PAIRWISE_REMINDER);
        assert!(r.is_well_formed());
        assert_eq!(r.turns().len(), 4);
    }
}
