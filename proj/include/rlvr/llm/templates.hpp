// SPDX-License-Identifier: Apache-2.0
//
// Judge prompt templates. The literals below are reproduced byte-for-byte,
// trailing double spaces included; do not reformat.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace rlvr::llm {

inline constexpr std::string_view kGradingTemplate = R"tpl(Given a problem, determine whether the final answer in the provided (incomplete) solution process matches the reference answer.  
The reference answer may be one single option character (e.g., A, B, C, D), a numerical value, an expression, or a list of answers if multiple questions are involved.  
**The reference answer may be in Chinese or another language, but your evaluation should be language-agnostic.**  

Your task:  
- Compare the final output of the solution process with the reference answer.  
- If they **match exactly**, output **YES**.  
- If they **do not match**, output **NO**.  
- If the solution process is unclear, incomplete, or ambiguous, assume it is incorrect and output **NO**.  

Your output must be strictly **'YES'** or **'NO'**, with no additional words, punctuation, or explanation.  

---

**Question:**  
{question}  

**Solution Process (Final Step Only):**  
{response}  

**Reference Answer:**  
{reference}  

**Output:**  
)tpl";

inline constexpr std::string_view kClassificationTemplate = R"tpl(Based on the content of 'Question' and 'Answer' classify the subject into one of the following categories. 

Return only the corresponding subject ID. If classification is uncertain, return 999.

**Question:**  
{question}  

**Answer:**  
{answer}  

110	Mathematics
120	Information Science and System Science
130	Mechanics
140	Physics
150	Chemistry
170	Earth Science
180	Biology
190	Psychology
210	Agronomy
230	Animal Husbandry and Veterinary Science
310	Basic Medicine
320	Clinical Medicine
330	Preventive Medicine and Public Health
350	Pharmacy
360	Chinese Medicine and Chinese Materia Medica
413	Information and System Science Related Engineering and Technology
416	Natural Science Related Engineering and Technology
420	Surveying and Mapping Science and Technology
430	Materials Science
460	Mechanical Engineering
470	Power and Electrical Engineering
510	Electronics and Communications Technology
520	Computer Science and Technology
530	Chemical Engineering
550	Food Science and Technology
560	Civil Engineering
570	Water Conservancy Engineering
580	Transportation Engineering
610	Environmental/Resource Science and Technology
620	Safety Science and Technology
630	Management
710	Marxism
720	Philosophy
730	Religious Studies
740	Linguistics
750	Literature
760	Art
770	History
790	Economics
810	Political Science
820	Law
840	Sociology
850	Ethnology and Cultural Studies
860	Journalism and Communication
870	Library, Information, and Documentation
880	Education
890	Sports Science
910	Statistics
999	Unclassified
)tpl";

/// Replaces each `{name}` placeholder in a single left-to-right pass, so
/// placeholder-like text inside substituted values is left alone. Unknown
/// `{...}` sequences are copied through.
inline std::string render_template(
    std::string_view tpl,
    std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tpl.size() + 256);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      const auto close = tpl.find('}', i);
      if (close != std::string_view::npos) {
        const auto name = tpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (key == name) {
            out.append(value);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i++]);
  }
  return out;
}

inline std::string render_grading_prompt(std::string_view question, std::string_view final_step,
                                         std::string_view reference) {
  return render_template(kGradingTemplate,
                         {{"question", question}, {"response", final_step}, {"reference", reference}});
}

inline std::string render_classification_prompt(std::string_view question, std::string_view answer) {
  return render_template(kClassificationTemplate, {{"question", question}, {"answer", answer}});
}

}  // namespace rlvr::llm
