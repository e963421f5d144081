#include "tracexp/outcome_stats.hpp"

#include <algorithm>
#include <numeric>

#include "tracexp/errors.hpp"

namespace tracexp {

namespace {

double as_double(std::int64_t x) { return static_cast<double>(x); }

// num1/den1 divided by num2/den2, evaluated as one quotient of integer
// products so exact ratios (e.g. 1.0) come out exact.
Ratio ratio_of(std::int64_t num1, std::int64_t den1, std::int64_t num2, std::int64_t den2) {
  if (num2 == 0) return num1 == 0 ? Ratio::undefined() : Ratio::infinite();
  return Ratio::finite(as_double(num1) * as_double(den2) / (as_double(den1) * as_double(num2)));
}

// Orders ranked rows best-first and stamps best / second-best / worst.
void annotate(std::vector<std::size_t> ranked, std::vector<StatsRow>& rows,
              std::uint8_t StatsRow::*field) {
  if (ranked.empty()) return;
  rows[ranked.front()].*field |= kBest;
  if (ranked.size() > 1) rows[ranked[1]].*field |= kSecondBest;
  // Worst is the last element; on ties it is the canonically earliest of the
  // tied group.
  std::size_t worst = ranked.size() - 1;
  while (worst > 0) {
    const auto& cur = rows[ranked[worst]];
    const auto& prev = rows[ranked[worst - 1]];
    bool tied = false;
    if (field == &StatsRow::prevalence_annotation) {
      tied = prev.prevalence.delta == cur.prevalence.delta;
    } else {
      tied = prev.reliability.rr == cur.reliability.rr;
    }
    if (!tied) break;
    --worst;
  }
  rows[ranked[worst]].*field |= kWorst;
}

// RR ordering key: +inf above every finite value.
bool rr_greater(const Ratio& x, const Ratio& y) {
  if (x.is_infinite()) return !y.is_infinite();
  if (y.is_infinite()) return false;
  return x.value > y.value;
}

}  // namespace

ContingencyTable build_contingency(const FlagMatrix& m, RubricId rubric) {
  if (m.empty()) throw EmptyMatrix();
  ContingencyTable ct;
  ct.rubric = rubric;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const bool flag = m.rows[i][rubric] != 0;
    const bool success = m.success[i];
    if (flag && !success) ++ct.a;
    if (!flag && !success) ++ct.b;
    if (flag && success) ++ct.c;
    if (!flag && success) ++ct.d;
  }
  return ct;
}

PrevalenceResult prevalence(const ContingencyTable& ct) {
  const std::int64_t failures = ct.a + ct.b;
  const std::int64_t successes = ct.c + ct.d;
  if (failures < 1 || successes < 1) {
    throw DegenerateOutcomeClass(std::string("prevalence of ") +
                                 std::string(rubric_key(ct.rubric)) +
                                 " needs both failed and successful runs");
  }
  PrevalenceResult r;
  r.p_flag_given_failure = as_double(ct.a) / as_double(failures);
  r.p_flag_given_success = as_double(ct.c) / as_double(successes);
  r.delta = r.p_flag_given_failure - r.p_flag_given_success;
  r.ratio = ratio_of(ct.a, failures, ct.c, successes);
  return r;
}

ReliabilityResult reliability(const ContingencyTable& ct) {
  ReliabilityResult r;
  const std::int64_t flagged = ct.a + ct.c;
  const std::int64_t unflagged = ct.b + ct.d;
  if (flagged > 0) r.p_success_given_flag = as_double(ct.c) / as_double(flagged);
  if (unflagged > 0) r.p_success_given_noflag = as_double(ct.d) / as_double(unflagged);
  if (r.p_success_given_flag && r.p_success_given_noflag) {
    r.delta = *r.p_success_given_flag - *r.p_success_given_noflag;
    r.rr = ratio_of(ct.c, flagged, ct.d, unflagged);
  } else {
    r.rr = Ratio::undefined();
  }
  return r;
}

StatsReport stats_report(const FlagMatrix& m) {
  if (m.empty()) throw EmptyMatrix();
  StatsReport report;
  report.n_runs = static_cast<std::int64_t>(m.size());
  report.n_success = std::count(m.success.begin(), m.success.end(), true);
  report.n_failure = report.n_runs - report.n_success;
  report.run_ids = m.run_ids();
  if (report.n_success == 0 || report.n_failure == 0) {
    throw DegenerateOutcomeClass("stats report needs both failed and successful runs");
  }

  for (RubricId id : kCanonicalRubrics) {
    StatsRow row;
    row.rubric = id;
    row.table = build_contingency(m, id);
    row.prevalence = prevalence(row.table);
    row.reliability = reliability(row.table);
    report.rows.push_back(row);
  }

  std::vector<std::size_t> by_delta(report.rows.size());
  std::iota(by_delta.begin(), by_delta.end(), 0);
  std::stable_sort(by_delta.begin(), by_delta.end(), [&](std::size_t x, std::size_t y) {
    return report.rows[x].prevalence.delta < report.rows[y].prevalence.delta;
  });
  annotate(by_delta, report.rows, &StatsRow::prevalence_annotation);

  std::vector<std::size_t> by_rr;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (!report.rows[i].reliability.rr.is_undefined()) by_rr.push_back(i);
  }
  std::stable_sort(by_rr.begin(), by_rr.end(), [&](std::size_t x, std::size_t y) {
    return rr_greater(report.rows[x].reliability.rr, report.rows[y].reliability.rr);
  });
  annotate(by_rr, report.rows, &StatsRow::reliability_annotation);
  return report;
}

}  // namespace tracexp
