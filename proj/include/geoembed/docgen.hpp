#ifndef GEOEMBED_DOCGEN_HPP
#define GEOEMBED_DOCGEN_HPP

#include <string>

namespace geoembed {

// Renders the worked end-to-end example (tiny corpus traced through tag
// weighting, PPMI, KL selection and one Adagrad step) as markdown. Every
// number in the document is computed by the live code at render time; the
// committed copy under docs/ is a snapshot kept in sync by tests.
std::string render_worked_example();

}  // namespace geoembed

#endif
