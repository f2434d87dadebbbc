#include "invwb/engine.hpp"

#include <algorithm>
#include <sstream>

#include "invwb/parse.hpp"
#include "invwb/print.hpp"

namespace invwb {

std::string obligation_name(Obligation o) {
  switch (o) {
    case Obligation::Precondition: return "precondition";
    case Obligation::Initiation: return "initiation";
    case Obligation::Consecution: return "consecution";
    case Obligation::VariantNonneg: return "variant_nonneg";
    case Obligation::VariantDecrease: return "variant_decrease";
    case Obligation::VariantReal: return "variant_real";
    case Obligation::ExitInvariant: return "exit_invariant";
    case Obligation::Postcondition: return "postcondition";
    case Obligation::Divergence: return "divergence";
    case Obligation::RuntimeError: return "runtime_error";
  }
  return "?";
}

std::string verdict_status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass: return "pass";
    case VerdictStatus::Fail: return "fail";
    case VerdictStatus::Undef: return "undefined";
  }
  return "?";
}

bool CheckReport::all_pass() const {
  for (const auto& v : verdicts)
    if (v.status != VerdictStatus::Pass) return false;
  return true;
}

const Verdict* CheckReport::first_failure() const {
  for (const auto& v : verdicts)
    if (v.status != VerdictStatus::Pass) return &v;
  return nullptr;
}

namespace {

struct RunAbort {};

Value default_value(SemType t) {
  switch (t) {
    case SemType::Int: return Value(BigInt(0));
    case SemType::Real: return Value(0.0);
    case SemType::Bool: return Value(false);
    case SemType::ListRef:
    case SemType::NodeRef: return Value(RefVal{});
    default: {
      ArrayVal a;
      a.lower = 1;
      return Value(a);
    }
  }
}

class Interpreter {
 public:
  Interpreter(const Routine& r, ExecState& st, const RunOptions& opts)
      : r_(r), st_(st), opts_(opts),
        registry_(opts.registry ? opts.registry : &TheoryRegistry::standard()) {}

  std::pair<RunResult, CheckReport> run(const std::vector<Value>& args) {
    report_.routine = r_.name;
    bind(args);
    st_.pre_env = st_.env;
    st_.pre_heap = st_.heap;

    try {
      if (opts_.mode != CheckMode::None) check_routine_clauses(r_.precondition, Obligation::Precondition, true);
      exec_all(r_.body);
      if (opts_.mode != CheckMode::None) check_routine_clauses(r_.postcondition, Obligation::Postcondition, false);
    } catch (const RunAbort&) {
      report_.aborted = true;
    }

    RunResult result;
    if (r_.is_function()) {
      result.result = st_.env.at("Result");
      result.outputs["Result"] = st_.env.at("Result");
    } else if (!r_.outputs.empty()) {
      for (const auto& o : r_.outputs) result.outputs[o.name] = st_.env.at(o.name);
    } else {
      for (const auto& p : r_.params) result.outputs[p.name] = st_.env.at(p.name);
    }
    return {std::move(result), std::move(report_)};
  }

 private:
  // ---- plumbing ----

  EvalScope scope(bool assertion) const {
    EvalScope s;
    s.env = &st_.env;
    s.pre_env = &st_.pre_env;
    s.heap = &st_.heap;
    s.pre_heap = &st_.pre_heap;
    s.registry = registry_;
    s.memo = &st_.memo;
    s.assertion_mode = assertion;
    s.eps_real = opts_.eps_real;
    return s;
  }

  void bind(const std::vector<Value>& args) {
    if (args.size() != r_.params.size())
      throw std::invalid_argument(r_.name + " expects " + std::to_string(r_.params.size()) +
                                  " arguments, got " + std::to_string(args.size()));
    for (std::size_t i = 0; i < r_.params.size(); ++i) st_.env[r_.params[i].name] = args[i];
    for (const auto& v : r_.outputs) st_.env[v.name] = default_value(v.type);
    for (const auto& v : r_.locals) st_.env[v.name] = default_value(v.type);
  }

  int take_snapshot() {
    Snapshot snap;
    snap.id = static_cast<int>(report_.snapshots.size());
    for (const auto& [name, val] : st_.env)
      snap.vars[name] = value_to_text(val, &st_.heap, &st_.pre_heap);
    report_.snapshots.push_back(std::move(snap));
    return report_.snapshots.back().id;
  }

  Verdict& push_verdict(Obligation ob, int loop_id, int entry, long long iter) {
    report_.verdicts.push_back(Verdict{ob, VerdictStatus::Pass, loop_id, entry, iter, {}, "", -1});
    return report_.verdicts.back();
  }

  void finalize(Verdict& v) {
    for (const auto& c : v.clauses) {
      if (c.status == VerdictStatus::Fail) { v.status = VerdictStatus::Fail; break; }
      if (c.status == VerdictStatus::Undef) v.status = VerdictStatus::Undef;
    }
    if (v.status != VerdictStatus::Pass && v.snapshot_id < 0) v.snapshot_id = take_snapshot();
  }

  void eval_clauses_into(Verdict& v, const std::vector<AnnotatedClause>& clauses) {
    EvalScope s = scope(true);
    int idx = 0;
    for (const auto& c : clauses) {
      TruthResult t = check_assertion(*c.expr, s);
      ClauseResult cr;
      cr.index = idx++;
      cr.clause = print_expr(*c.expr);
      cr.candidate_id = c.candidate_id;
      cr.status = t.truth == Truth::True    ? VerdictStatus::Pass
                  : t.truth == Truth::False ? VerdictStatus::Fail
                                            : VerdictStatus::Undef;
      cr.detail = t.why;
      v.clauses.push_back(std::move(cr));
    }
    finalize(v);
  }

  void check_routine_clauses(const std::vector<AnnotatedClause>& clauses, Obligation ob,
                             bool abort_on_failure) {
    Verdict& v = push_verdict(ob, -1, 0, 0);
    eval_clauses_into(v, clauses);
    if (abort_on_failure && v.status != VerdictStatus::Pass) throw RunAbort{};
  }

  [[noreturn]] void runtime_error(const std::string& msg) {
    Verdict& v = push_verdict(Obligation::RuntimeError, -1, 0, 0);
    v.status = VerdictStatus::Undef;
    v.detail = msg;
    v.snapshot_id = take_snapshot();
    throw RunAbort{};
  }

  Value eval_exec(const Expr& e) {
    try {
      return evaluate(e, scope(false));
    } catch (const EvalError& err) {
      runtime_error(err.what());
    }
  }

  bool eval_cond(const Expr& e) {
    Value v = eval_exec(e);
    if (!v.is_bool()) runtime_error("condition is not boolean");
    return v.as_bool();
  }

  // ---- statements ----

  void exec_all(const std::vector<StmtPtr>& stmts) {
    for (const auto& s : stmts) exec(*s);
  }

  void exec(const Stmt& stmt) {
    std::visit([&](const auto& s) { exec_node(s); }, stmt.node);
  }

  void exec_node(const AssignStmt& s) {
    Value val = eval_exec(*s.value);
    auto it = st_.env.find(s.target.var);
    if (it == st_.env.end()) runtime_error("unbound variable '" + s.target.var + "'");

    if (s.target.indices.empty() && s.target.field.empty()) {
      it->second = std::move(val);
      return;
    }
    try {
      if (!s.target.field.empty()) {
        if (!s.target.indices.empty()) runtime_error("indexed field assignment unsupported");
        const Value& t = it->second;
        if (!t.is_ref()) runtime_error("field assignment to a non-reference");
        RefVal r = t.as_ref();
        if (r.is_void()) runtime_error("field assignment to Void");
        if (r.pre || !st_.heap.valid(r)) runtime_error("field assignment to a stale reference");
        HeapRec& rec = st_.heap.at(r);
        auto as_link = [&](const Value& v) -> RefVal {
          if (!v.is_ref()) runtime_error("link fields hold references");
          return v.as_ref();
        };
        if (s.target.field == "value") rec.value = val;
        else if (s.target.field == "next") rec.next = as_link(val);
        else if (s.target.field == "left") rec.left = as_link(val);
        else if (s.target.field == "right") rec.right = as_link(val);
        else runtime_error("unknown record field '" + s.target.field + "'");
        return;
      }
      Value* slot = &it->second;
      for (std::size_t i = 0; i < s.target.indices.size(); ++i) {
        if (!slot->is_array()) runtime_error("indexing a non-array");
        long long idx = to_i64(evaluate(*s.target.indices[i], scope(false)).as_int());
        slot = &slot->as_array().at(idx);
      }
      *slot = std::move(val);
    } catch (const EvalError& err) {
      runtime_error(err.what());
    }
  }

  void exec_node(const IfStmt& s) {
    if (eval_cond(*s.cond)) exec_all(s.then_branch);
    else exec_all(s.else_branch);
  }

  void exec_node(const SwapStmt& s) {
    auto it = st_.env.find(s.array);
    if (it == st_.env.end() || !it->second.is_array())
      runtime_error("swap on a non-array '" + s.array + "'");
    try {
      long long i = to_i64(evaluate(*s.i, scope(false)).as_int());
      long long j = to_i64(evaluate(*s.j, scope(false)).as_int());
      ArrayVal& a = it->second.as_array();
      std::swap(a.at(i), a.at(j));
    } catch (const EvalError& err) {
      runtime_error(err.what());
    }
  }

  void exec_node(const NewStmt& s) {
    Value v = eval_exec(*s.value);
    int id = st_.heap.allocate(std::move(v));
    st_.env[s.var] = Value(RefVal{id, false});
  }

  // ---- loops and their obligations ----

  bool loop_checked(const LoopStmt& loop) const {
    if (opts_.mode == CheckMode::None) return false;
    if (opts_.focus_loop && *opts_.focus_loop != loop.loop_id) return false;
    return true;
  }

  std::vector<AnnotatedClause> clauses_for(const LoopStmt& loop) const {
    std::vector<AnnotatedClause> out;
    if (opts_.mode == CheckMode::Gold || opts_.mode == CheckMode::Both)
      out.insert(out.end(), loop.invariant.begin(), loop.invariant.end());
    if (opts_.mode == CheckMode::Candidates || opts_.mode == CheckMode::Both) {
      auto it = opts_.candidate_clauses.find(loop.loop_id);
      if (it != opts_.candidate_clauses.end())
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }

  void invariant_checkpoint(const LoopStmt& loop, Obligation ob, int entry, long long iter,
                            const std::vector<AnnotatedClause>& clauses) {
    Verdict& v = push_verdict(ob, loop.loop_id, entry, iter);
    eval_clauses_into(v, clauses);
    if (opts_.hook && ob != Obligation::ExitInvariant) {
      EvalScope s = scope(true);
      auto eval_clause = [&s](const Expr& e) { return check_assertion(e, s); };
      if (!opts_.hook->on_checkpoint(ob, loop.loop_id, iter, eval_clause)) throw RunAbort{};
    }
  }

  void exec_node(const LoopStmt& loop) {
    const bool checked = loop_checked(loop);
    const int entry = loop_entries_[loop.loop_id]++;
    exec_all(loop.init);

    std::vector<AnnotatedClause> clauses;
    LoopTrace trace;
    trace.loop_id = loop.loop_id;
    trace.entry = entry;
    if (checked) {
      clauses = clauses_for(loop);
      invariant_checkpoint(loop, Obligation::Initiation, entry, 0, clauses);
    }

    long long iter = 0;
    while (true) {
      if (!eval_cond(*loop.exit)) {
        ++iter;
        // variant before the body: well-founded (nonnegative) when the body runs
        Value v_before;
        bool have_before = false;
        if (checked && loop.variant) {
          Verdict& v = push_verdict(Obligation::VariantNonneg, loop.loop_id, entry, iter);
          EvalScope s = scope(true);
          try {
            v_before = evaluate(*loop.variant, s);
            have_before = true;
            if (v_before.is_real()) {
              trace.real_mode = true;
              v.detail = "real-mode";
            } else if (!v_before.is_int()) {
              v.status = VerdictStatus::Undef;
              v.detail = "variant is not numeric";
            } else if (v_before.as_int() < 0) {
              v.status = VerdictStatus::Fail;
              v.detail = "variant " + v_before.as_int().str() + " < 0";
            }
            if (have_before)
              trace.variant_values.push_back(value_to_text(v_before));
          } catch (const EvalError& err) {
            v.status = VerdictStatus::Undef;
            v.detail = err.what();
          }
          if (v.status != VerdictStatus::Pass && v.snapshot_id < 0) v.snapshot_id = take_snapshot();
        }

        exec_all(loop.body);
        trace.body_iterations = iter;
        report_.total_iterations++;

        if (checked) {
          invariant_checkpoint(loop, Obligation::Consecution, entry, iter, clauses);
          if (loop.variant) {
            Obligation ob = trace.real_mode ? Obligation::VariantReal : Obligation::VariantDecrease;
            Verdict& v = push_verdict(ob, loop.loop_id, entry, iter);
            EvalScope s = scope(true);
            try {
              Value v_after = evaluate(*loop.variant, s);
              if (!have_before) {
                v.status = VerdictStatus::Undef;
                v.detail = "variant undefined before the body";
              } else if (trace.real_mode) {
                // real-valued variant: non-increase with tolerance
                double before = v_before.is_real() ? v_before.as_real() : to_f64(v_before.as_int());
                double after = v_after.is_real() ? v_after.as_real() : to_f64(v_after.as_int());
                if (!(after <= before + opts_.eps_real)) {
                  v.status = VerdictStatus::Fail;
                  v.detail = "variant increased: " + std::to_string(before) + " -> " +
                             std::to_string(after);
                }
              } else if (!v_after.is_int() || !v_before.is_int()) {
                v.status = VerdictStatus::Undef;
                v.detail = "variant is not integral";
              } else if (!(v_after.as_int() < v_before.as_int())) {
                v.status = VerdictStatus::Fail;
                v.detail = "variant did not decrease: " + v_before.as_int().str() + " -> " +
                           v_after.as_int().str();
              }
            } catch (const EvalError& err) {
              v.status = VerdictStatus::Undef;
              v.detail = err.what();
            }
            if (v.status != VerdictStatus::Pass && v.snapshot_id < 0) v.snapshot_id = take_snapshot();
          }
        }
        if (iter >= opts_.iteration_cap) {
          Verdict& v = push_verdict(Obligation::Divergence, loop.loop_id, entry, iter);
          v.status = VerdictStatus::Fail;
          v.detail = "iteration cap " + std::to_string(opts_.iteration_cap) + " exceeded";
          v.snapshot_id = take_snapshot();
          throw RunAbort{};
        }
      } else {
        if (checked) {
          // final variant value, for the trace
          if (loop.variant && iter > 0) {
            try {
              trace.variant_values.push_back(value_to_text(evaluate(*loop.variant, scope(true))));
            } catch (const EvalError&) {
            }
          }
          invariant_checkpoint(loop, Obligation::ExitInvariant, entry, iter, clauses);
        }
        break;
      }
    }
    if (checked) report_.loops.push_back(std::move(trace));
  }

  const Routine& r_;
  ExecState& st_;
  const RunOptions& opts_;
  const TheoryRegistry* registry_;
  CheckReport report_;
  std::map<int, int> loop_entries_;
};

} // namespace

std::pair<RunResult, CheckReport> run_checked(const Routine& r, const std::vector<Value>& args,
                                              ExecState& state, const RunOptions& opts) {
  Interpreter interp(r, state, opts);
  return interp.run(args);
}

VariantVerdict check_variant_wellformed(const CheckReport& report, int loop_id) {
  VariantVerdict out;
  for (const auto& t : report.loops) {
    if (t.loop_id == loop_id) {
      out.executed = out.executed || t.body_iterations > 0;
      out.real_mode = out.real_mode || t.real_mode;
    }
  }
  for (const auto& v : report.verdicts) {
    if (v.loop_id != loop_id) continue;
    if (v.obligation != Obligation::VariantNonneg && v.obligation != Obligation::VariantDecrease &&
        v.obligation != Obligation::VariantReal)
      continue;
    if (v.status != VerdictStatus::Pass) {
      out.ok = false;
      if (out.detail.empty())
        out.detail = obligation_name(v.obligation) + " at iteration " +
                     std::to_string(v.iteration) + ": " + v.detail;
    }
  }
  if (out.real_mode && out.detail.empty()) out.detail = "real-mode";
  return out;
}

std::string explain_failure(const CheckReport& report) {
  const Verdict* v = report.first_failure();
  if (!v) throw std::invalid_argument("nothing to explain: all verdicts pass");

  std::ostringstream os;
  os << obligation_name(v->obligation) << " failure in " << report.routine;
  if (v->loop_id >= 0) os << " (loop " << v->loop_id << ", iteration " << v->iteration << ")";
  os << ":";

  const ClauseResult* bad = nullptr;
  for (const auto& c : v->clauses)
    if (c.status != VerdictStatus::Pass) { bad = &c; break; }
  if (bad) {
    os << " clause \"" << bad->clause << "\" is "
       << (bad->status == VerdictStatus::Fail ? "false" : "undefined");
    if (!bad->detail.empty()) os << " (" << bad->detail << ")";
  } else if (!v->detail.empty()) {
    os << " " << v->detail;
  }

  if (v->snapshot_id >= 0 && v->snapshot_id < static_cast<int>(report.snapshots.size())) {
    const Snapshot& snap = report.snapshots[static_cast<std::size_t>(v->snapshot_id)];
    std::vector<std::string> names;
    if (bad) {
      try {
        names = free_vars(*parse_expr(bad->clause));
      } catch (...) {
      }
    }
    os << ";";
    bool first = true;
    for (const auto& [name, text] : snap.vars) {
      if (!names.empty() &&
          std::find(names.begin(), names.end(), name) == names.end())
        continue;
      os << (first ? " " : ", ") << name << " = " << text;
      first = false;
    }
  }
  return os.str();
}

Json report_to_json(const CheckReport& report) {
  Json j;
  j["routine"] = report.routine;
  j["all_pass"] = report.all_pass();
  j["iterations"] = report.total_iterations;
  j["aborted"] = report.aborted;
  Json verdicts = Json::array();
  for (const auto& v : report.verdicts) {
    Json jv;
    jv["obligation"] = obligation_name(v.obligation);
    jv["status"] = verdict_status_name(v.status);
    if (v.loop_id >= 0) {
      jv["loop"] = v.loop_id;
      jv["entry"] = v.loop_entry;
      jv["iteration"] = v.iteration;
    }
    if (!v.detail.empty()) jv["detail"] = v.detail;
    if (!v.clauses.empty()) {
      Json cl = Json::array();
      for (const auto& c : v.clauses) {
        Json jc;
        jc["clause"] = c.clause;
        jc["status"] = verdict_status_name(c.status);
        if (!c.detail.empty()) jc["detail"] = c.detail;
        if (c.candidate_id >= 0) jc["candidate"] = c.candidate_id;
        cl.push_back(std::move(jc));
      }
      jv["clauses"] = std::move(cl);
    }
    if (v.snapshot_id >= 0) jv["snapshot"] = v.snapshot_id;
    verdicts.push_back(std::move(jv));
  }
  j["verdicts"] = std::move(verdicts);
  Json snaps = Json::array();
  for (const auto& s : report.snapshots) {
    Json js;
    js["id"] = s.id;
    js["vars"] = s.vars;
    snaps.push_back(std::move(js));
  }
  j["snapshots"] = std::move(snaps);
  Json loops = Json::array();
  for (const auto& t : report.loops) {
    Json jt;
    jt["loop"] = t.loop_id;
    jt["entry"] = t.entry;
    jt["body_iterations"] = t.body_iterations;
    if (t.real_mode) jt["real_mode"] = true;
    jt["variant_values"] = t.variant_values;
    loops.push_back(std::move(jt));
  }
  j["loops"] = std::move(loops);
  return j;
}

} // namespace invwb
