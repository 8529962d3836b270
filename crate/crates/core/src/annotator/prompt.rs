use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Taxonomy, TopicId};
use crate::error::{Error, Result};

pub const FEWSHOT_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Body of a chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub text: String,
    pub labels: Vec<TopicId>,
}

#[derive(Deserialize)]
struct RawExample {
    text: String,
    labels: Vec<String>,
}

/// Load few-shot examples from JSON: `[{"text": .., "labels": [..]}, ..]`.
/// Labels may use any surface form known to the taxonomy.
pub fn load_fewshot(bytes: &[u8], taxonomy: &Taxonomy) -> Result<Vec<FewShotExample>> {
    let raw: Vec<RawExample> =
        serde_json::from_slice(bytes).map_err(|e| Error::parse("few-shot examples", &e))?;
    raw.into_iter()
        .map(|r| {
            let labels = r
                .labels
                .iter()
                .map(|l| {
                    taxonomy
                        .canonical_topic(l)
                        .map(|t| t.id)
                        .ok_or_else(|| Error::FewShot(format!("unknown label `{l}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FewShotExample {
                text: r.text,
                labels,
            })
        })
        .collect()
}

pub(crate) fn validate_fewshot(examples: &[FewShotExample]) -> Result<()> {
    if examples.len() != FEWSHOT_COUNT {
        return Err(Error::FewShot(format!(
            "expected {FEWSHOT_COUNT} examples, got {}",
            examples.len()
        )));
    }
    for (i, ex) in examples.iter().enumerate() {
        if ex.text.trim().is_empty() || ex.labels.is_empty() {
            return Err(Error::FewShot(format!("example {} needs text and labels", i + 1)));
        }
    }
    let covered: BTreeSet<TopicId> = examples.iter().flat_map(|e| e.labels.iter().copied()).collect();
    if covered.len() != FEWSHOT_COUNT {
        return Err(Error::FewShot(format!(
            "examples must cover exactly {FEWSHOT_COUNT} distinct topics, found {}",
            covered.len()
        )));
    }
    Ok(())
}

fn system_message(taxonomy: &Taxonomy) -> String {
    let mut s = String::from(
        "Tu es un assistant qui classe par thématique des extraits de journaux \
         télévisés et radiophoniques français. Chaque extrait est une transcription \
         automatique et peut contenir des erreurs.\n\
         Indique toutes les catégories pertinentes pour l'extrait (plusieurs \
         catégories sont possibles, l'ordre n'a pas d'importance), parmi la liste \
         suivante :\n",
    );
    for topic in taxonomy.topics() {
        s.push_str("- ");
        s.push_str(&topic.display_name);
        if !topic.description.is_empty() {
            s.push_str(" : ");
            s.push_str(&topic.description);
        }
        s.push('\n');
    }
    s.push_str(
        "Réponds uniquement par une liste JSON de noms de catégories, recopiés \
         exactement depuis la liste ci-dessus, par exemple [\"catégorie 1\", \
         \"catégorie 2\"]. N'ajoute aucune explication et n'invente pas de catégorie.",
    );
    s
}

fn labels_json(labels: &[TopicId], taxonomy: &Taxonomy) -> String {
    let names: Vec<&str> = labels
        .iter()
        .map(|t| taxonomy.topic(*t).display_name.as_str())
        .collect();
    serde_json::to_string(&names).expect("string list serializes")
}

/// Build the few-shot chat request for one dialogue: the system instruction,
/// three user/assistant example pairs, then the dialogue text.
pub fn build_prompt(
    dialogue_text: &str,
    taxonomy: &Taxonomy,
    fewshot: &[FewShotExample],
    model: &str,
    temperature: f64,
    max_tokens: u32,
) -> Result<ChatRequest> {
    validate_fewshot(fewshot)?;
    if dialogue_text.trim().is_empty() {
        return Err(Error::EmptyText("prompt target".into()));
    }
    let mut messages = Vec::with_capacity(2 + 2 * FEWSHOT_COUNT);
    messages.push(ChatMessage {
        role: Role::System,
        content: system_message(taxonomy),
    });
    for ex in fewshot {
        messages.push(ChatMessage {
            role: Role::User,
            content: ex.text.trim().to_string(),
        });
        messages.push(ChatMessage {
            role: Role::Assistant,
            content: labels_json(&ex.labels, taxonomy),
        });
    }
    messages.push(ChatMessage {
        role: Role::User,
        content: dialogue_text.trim().to_string(),
    });
    Ok(ChatRequest {
        model: model.to_string(),
        messages,
        temperature,
        max_tokens,
    })
}
