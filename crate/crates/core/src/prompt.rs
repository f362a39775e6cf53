// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multiple-choice instruction template used when exporting predictions from real
//! models. The simulator does not use it.

pub const PROMPT_TEMPLATE: &str = "Answer the following multiple-choice question based on the image.

Question: 
{question}

Options:
{option 1}
{option 2}
{option 3}
{option 4}

Your response must be ONLY the text of the correct option from the list above, and nothing else.";

/// Fills the template; `options` must hold exactly four entries.
pub fn render_prompt(question: &str, options: &[String; 4]) -> String {
    PROMPT_TEMPLATE
        .replace("{question}", question)
        .replace("{option 1}", &options[0])
        .replace("{option 2}", &options[1])
        .replace("{option 3}", &options[2])
        .replace("{option 4}", &options[3])
}
