#pragma once

#include <string>
#include <string_view>

#include "scmprobe/domain.hpp"

namespace scmprobe {

// Pulls a final answer out of the answer segment of a transcript.
//
// Numeric answers are tried in priority order: content of the last
// \boxed{...} group, then the first number after an "answer is" phrase, then
// the last standalone number anywhere in the text (recorded with
// fallback_last_number confidence). Values are normalized to exact canonical
// rationals, so "1,234", "3.50" and "\frac{7}{2}" all come out as "1234",
// "7/2", "7/2".
//
// Multiple-choice answers take the first standalone option label after an
// answer marker, else the last standalone label anywhere (fallback
// confidence). Labels are canonicalized to uppercase and must be within the
// instance's option count.
ExtractedAnswer extract_answer(std::string_view answer_text, AnswerKind kind,
                               std::size_t option_count = 0);

// Exact-match grading. Numeric comparison is exact rational equality (no
// floating point anywhere); multiple-choice is label equality. An extraction
// with confidence none is wrong by definition. Throws if the extraction kind
// does not match the instance kind, or if the instance's gold value is
// malformed (validate() should have rejected it earlier).
bool grade(const ExtractedAnswer& extracted, const ProblemInstance& instance);

}  // namespace scmprobe
