#include "aog/parsing.hpp"

namespace aog {

const char* to_string(Mode mode) { return mode == Mode::Folding ? "folding" : "unfolding"; }

const char* to_string(GradientMode mode) { return mode == GradientMode::Exact ? "exact" : "paper"; }

Mode mode_from_string(const std::string& s) {
    if (s == "folding") return Mode::Folding;
    if (s == "unfolding") return Mode::Unfolding;
    throw ParameterError("mode must be 'folding' or 'unfolding', got '" + s + "'");
}

GradientMode gradient_mode_from_string(const std::string& s) {
    if (s == "exact") return GradientMode::Exact;
    if (s == "paper") return GradientMode::PaperLiteral;
    throw ParameterError("gradient mode must be 'exact' or 'paper', got '" + s + "'");
}

} // namespace aog
