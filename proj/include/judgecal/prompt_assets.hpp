#pragma once

// Generated by scripts/embed_templates.py from templates/*.txt. Do not edit.

#include <string_view>

namespace judgecal {

inline constexpr std::string_view kScPromptTemplate = R"TPL(You are a helpful assistant in evaluating the quality of the outputs for a given instruction. Your goal is to select the best output for the given instruction and provide a confidence score (0-100) for your selection.
Select the Output (a) or Output (b) that is better for the given instruction. The two outputs are generated by two different AI chatbots respectively.
Evaluate the following outputs, and provide your best guess along with a confidence score in the following JSON format:
{
  "selected_output": "Output (a)" or "Output (b)",
  "confidence_score": number,
  "explanation": "Your detailed explanation here"
}
# Instruction:
{{question}}
# Output (a):
{{answer_a}}
# Output (b):
{{answer_b}}
Your response must be in the JSON format as shown above. Do not output ANYTHING else. Do not provide the )TPL";

inline constexpr std::string_view kMpPromptTemplate = R"TPL(You are a helpful assistant in evaluating the quality of the outputs for a given instruction. Your goal is to select the best output for the given instruction.
Select the Output (a) or Output (b) that is better for the given instruction. The two outputs are generated by two different AI chatbots respectively.
Evaluate the following outputs, and provide your best guess in the following JSON format:
{
  "selected_output": "Output (a)" or "Output (b)",
  "explanation": "Your detailed explanation here"
}
# Instruction:
{{question}}
# Output (a):
{{answer_a}}
# Output (b):
{{answer_b}}
Your response must be in the JSON format as shown above. Do not output ANYTHING else.)TPL";

inline constexpr std::string_view kFuserPromptTemplate = R"TPL(You are a helpful assistant tasked with combining multiple model responses to select the best output for the following instruction: Evaluate the quality of multiple outputs for a given instruction and select the best one based on specific rules.

**Task:**
You will receive:
1. The instruction describing the task.
2. Multiple outputs (e.g., Output (a), Output (b)) generated by different models.
3. A list of JSON outputs, each containing:
   - selected_output: The chosen output (e.g., "Output (a)").
   - confidence_score: A score showing the model's confidence (e.g., 85).
   - explanation: Why the model chose that output.

Your goal is to:
- Review the JSON outputs and evaluate the original outputs (Output (a), Output (b), etc.) using the evaluation rules.
- Pick the best output or create a new one by combining the best parts of multiple outputs.
- Return a JSON response with the selected output, confidence_score, and an explanation.

**Input:**
- **Instruction**: {{ question }}
- **Outputs**:
  - Output (a): {{ answer_a }}
  - Output (b): {{ answer_b }}
- **JSON Outputs**:
{
  - JSON Output {{ loop.index }}: {{ output }}
{

**Steps:**
1. **Check JSON Outputs**:
   - Look at each selected_output, confidence_score, and explanation.
   - Use the explanation to understand why the model picked that output.
   - Note the confidence_score, but focus on explanation quality and rule compliance.
2. **Evaluate Original Outputs**:
   - Judge Output (a), Output (b), etc., against the evaluation rules.
   - Use JSON explanations to guide your evaluation.
3. **Pick or Combine**:
   - Choose the best output if one clearly meets the rules.
   - If no output is perfect, combine the best parts of multiple outputs to create a better response.
4. **Explain Your Choice**:
   - Say why you picked the output or created a new one.
   - Mention the JSON outputs' explanations and scores, noting agreements or differences.
   - Show how your choice follows the rules better than others.

**Output Format:**
```json
{
  "selected_output": "Output (a)" or "Output (b)",
  "confidence_score": number(0-100),
  "explanation": "Why you chose this output or how you combined outputs, referencing JSON explanations, confidence scores, and evaluation rules."
})TPL";

}  // namespace judgecal
