#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invwb/inference.hpp"
#include "invwb/routine.hpp"

namespace invwb {

/// One corpus entry: a DSL source file holding one or more annotated
/// routines, with generation policies and gold-annotation metadata.
struct CorpusEntry {
  std::string id;           // file stem
  std::string title;        // human caption
  std::string category;     // searching | arithmetic | sorting | dynamic programming | data structures | fixpoint
  std::string file;         // path the entry was loaded from
  std::string source_text;
  std::vector<Routine> routines;
  std::vector<std::string> designated; // routines designated for inference recall
  std::map<std::string, GenPolicy> policies; // per routine
  bool real_mode = false;   // real-valued contracts (inference unsupported)

  const Routine& routine(const std::string& name) const;
  const Routine& main_routine() const { return routines.front(); }
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resolution order for the corpus directory: explicit argument, the
/// INVWB_CORPUS_DIR environment variable, then the built-in default.
std::string corpus_dir(const std::string& override_dir = "");

/// Load all entries listed in the corpus index; every entry must parse.
std::vector<CorpusEntry> load_corpus(const std::string& dir = "");

/// Entry by id; unknown ids are an error.
CorpusEntry get_entry(const std::string& id, const std::string& dir = "");

/// Find the entry containing a routine by name (entry id or routine name).
std::optional<CorpusEntry> find_entry_for(const std::string& name,
                                          const std::string& dir = "");

/// The gold invariant clauses of a routine's designated (single top-level)
/// loop, for inference recall scoring.
std::vector<GoldClause> gold_clauses(const Routine& r);

} // namespace invwb
