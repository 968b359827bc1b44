#ifndef NLAB_IO_HPP
#define NLAB_IO_HPP

#include <string>

#include "nlab/counterexamples.hpp"
#include "nlab/grid_function.hpp"
#include "nlab/kernels.hpp"
#include "nlab/liouville.hpp"
#include "nlab/solver.hpp"

namespace nlab {

// JSON round-trips.  Doubles are emitted with shortest-round-trip precision,
// so a dump/parse cycle reproduces every field bit for bit.  Parsing raises
// ConfigError on malformed text, missing fields, or invariant violations.
std::string kernel_to_json(const KernelSpec& k);
KernelSpec kernel_from_json(const std::string& text);

std::string tail_to_json(const TailSpec& t);
TailSpec tail_from_json(const std::string& text);

std::string grid_to_json(const GridFunction& u);
GridFunction grid_from_json(const std::string& text);

// Dirichlet problem ingestion for the solve subcommand.  Costs are cubic
// polynomial coefficient rows, one per kernel, since arbitrary callables have
// no file form.
DirichletProblem problem_from_json(const std::string& text);

// Reports for offline consumption.  CSV carries the plottable series only;
// the JSON form keeps every diagnostic.
std::string solve_report_to_json(const SolveReport& rep);
std::string solution_to_csv(const GridFunction& u);
std::string blowup_report_to_json(const BlowupReport& rep);
std::string blowup_report_to_csv(const BlowupReport& rep);
std::string comparability_to_json(const ComparabilityReport& rep);
std::string hypotheses_to_json(const HypothesisReport& rep);

// Whole-file helpers.  Writes land in a temp file first and are renamed into
// place, so readers never observe a partial file.  Failures raise
// ConfigError.
std::string read_text_file(const std::string& path);
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace nlab

#endif  // NLAB_IO_HPP
