// SPDX-License-Identifier: MIT OR Apache-2.0

//! The question-answering interface the protocols and benches drive.

use crate::error::Result;
use crate::oracle::{Answer, OracleWorld};
use crate::scene::{Concept, NamedColor, SceneSpec};
use crate::store::ActivationSequence;

/// Yes/no presence prompt; `{color}` and `{shape}` are substituted.
pub const PRESENCE_PROMPT: &str =
    "Look at the image carefully. \nIs there a {color} {shape} in the image?\nAnswer only 'yes' or 'no'.";
/// Color-naming prompt; `{object_name}` is substituted.
pub const COLOR_PROMPT: &str =
    "Observe the image carefully. What color is the {object_name}? Answer in one word.";

/// Prompt identifier used in replay files for a presence query.
pub fn presence_prompt_id(query: Concept) -> String {
    format!("presence:{}", query.label())
}

/// Prompt identifier used in replay files for a color query.
pub fn color_prompt_id(object_name: &str) -> String {
    format!("color:{object_name}")
}

/// A model that embeds scenes and answers prompts from (possibly steered)
/// activations.
pub trait VisionModel: Sync {
    fn model_id(&self) -> String;
    fn embed(&self, scene: &SceneSpec) -> Result<ActivationSequence>;
    fn ask_presence(&self, acts: &ActivationSequence, query: Concept) -> Result<Answer>;
    fn ask_color(&self, acts: &ActivationSequence, object_name: &str) -> Result<Answer>;
}

impl VisionModel for OracleWorld {
    fn model_id(&self) -> String {
        OracleWorld::model_id(self)
    }

    fn embed(&self, scene: &SceneSpec) -> Result<ActivationSequence> {
        OracleWorld::embed(self, scene)
    }

    fn ask_presence(&self, acts: &ActivationSequence, query: Concept) -> Result<Answer> {
        self.answer_presence(acts, query)
    }

    fn ask_color(&self, acts: &ActivationSequence, _object_name: &str) -> Result<Answer> {
        self.answer_color(acts)
    }
}

/// `Some(true)` for "yes", `Some(false)` for "no", in any capitalization;
/// anything else is unparseable.
pub fn parse_yes_no(answer: &str) -> Option<bool> {
    let a = answer.trim();
    if a.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if a.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

/// One of the six color names in any capitalization; shades are rejected.
pub fn parse_color(answer: &str) -> Option<NamedColor> {
    NamedColor::parse(answer.trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_parsing() {
        assert_eq!(parse_yes_no("YES"), Some(true));
        assert_eq!(parse_yes_no(" no\n"), Some(false));
        assert_eq!(parse_yes_no("yes."), None);
        assert_eq!(parse_yes_no("maybe"), None);
        assert_eq!(parse_color("Purple"), Some(NamedColor::Purple));
        assert_eq!(parse_color("lime"), None);
        assert_eq!(parse_color("dark red"), None);
    }
}
