"""Walkthrough: scoring the 132-item questionnaire for a small cohort."""

from exobench import aggregate_reports, default_definition, score_session
from exobench.report import render_factor_table
from exobench.synthdata import synth_questionnaire_response

definition = default_definition()
print(f"definition: {len(definition.items)} items, "
      f"{len(definition.sub_factor_to_factor)} sub-factors, "
      f"{len(definition.factors)} factors, "
      f"{len(definition.control_pairs)} control pairs")

reports = []
for k in range(5):
    response = synth_questionnaire_response(definition, seed=100 + k,
                                            subject_id=f"s{k + 1:02d}")
    report = score_session(response, definition)
    reports.append(report)
    fs = ", ".join(f"{f}={v:.2f}" for f, v in
                   sorted(report.factor_scores.items()))
    print(f"{report.subject_id}: {fs}; "
          f"consistency {report.consistency_pct:.1f}%")

print("\nacross the cohort:")
print(render_factor_table(aggregate_reports(reports)))

# what the consistency scale reacts to: answer one control twin far away
response = synth_questionnaire_response(definition, seed=100, subject_id="x")
pair = definition.control_pairs[0]
response.scores[pair.original] = 7
response.scores[pair.control] = 1
report = score_session(response, definition)
print(f"\nafter forcing one control pair seven points apart: "
      f"consistency {report.consistency_pct:.2f}%")
