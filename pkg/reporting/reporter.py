"""
Report generation module
Renders check and estimate reports as markdown
"""

from typing import List

from pydantic import BaseModel

from models.pydantic_models import (
    CocycleCheckReport, ErgodicityReport, ExchangeabilityReport, FrequencyEstimate,
    LimitReport, MatchReport, ValidationReport,
)


class ReportGenerator:
    """Generates markdown reports for checks and estimates"""

    def __init__(self, max_rows: int = 50):
        self.max_rows = max_rows

    def generate_markdown_report(self, report: BaseModel) -> str:
        """
        Generate a markdown report

        Args:
            report: any report model returned by a check or estimate

        Returns:
            Markdown-formatted report string
        """
        renderers = {
            ValidationReport: self._validation,
            CocycleCheckReport: self._cocycle,
            MatchReport: self._match,
            LimitReport: self._limit,
            ErgodicityReport: self._ergodicity,
            ExchangeabilityReport: self._exchangeability,
            FrequencyEstimate: self._frequencies,
        }
        render = renderers.get(type(report), self._generic)
        report_lines = render(report)

        # Footer
        report_lines.extend([
            "---",
            "*Generated by equipped-compacta*",
        ])
        return "\n".join(report_lines) + "\n"

    def _verdict(self, passed: bool) -> str:
        return "PASS" if passed else "FAIL"

    def _validation(self, report: ValidationReport) -> List[str]:
        report_lines = [
            "# Graph Validation",
            "",
            f"**Result:** {self._verdict(report.passed)}",
            f"**Depth:** {report.depth}",
            "",
        ]
        if report.violations:
            report_lines.extend(["## Violations", ""])
            for violation in report.violations[:self.max_rows]:
                report_lines.append(f"- **{violation.kind}:** {violation.detail}")
            report_lines.append("")
        return report_lines

    def _cocycle(self, report: CocycleCheckReport) -> List[str]:
        report_lines = [
            "# Cocycle Axioms",
            "",
            f"**Result:** {self._verdict(report.passed)}",
            f"**Levels:** 1..{report.level_bound}",
            "",
            f"- **Pairs checked:** {report.pairs_checked}",
            f"- **Triples checked:** {report.triples_checked}",
            f"- **Undefined values skipped:** {report.undefined_skipped}",
            "",
        ]
        if report.counterexample:
            counterexample = report.counterexample
            report_lines.extend([
                f"## Counterexample ({counterexample.axiom})",
                "",
                counterexample.detail,
                "",
            ])
            for path, value in zip(counterexample.paths, counterexample.values):
                report_lines.append(f"- `{path.label()}` ({value})")
            report_lines.append("")
        return report_lines

    def _match(self, report: MatchReport) -> List[str]:
        report_lines = [
            "# Measure vs Equipment",
            "",
            f"**Result:** {self._verdict(report.passed)}",
            f"**Depth:** {report.depth}",
            "",
            f"- **Pairs checked:** {report.pairs_checked}",
            f"- **Rows checked:** {report.rows_checked}",
            "",
        ]
        if report.witness:
            witness = report.witness
            report_lines.extend([
                "## Witness Pair",
                "",
                f"- **p:** `{witness.p.label()}`",
                f"- **q:** `{witness.q.label()}`",
                f"- **Measure ratio:** {witness.measure_ratio}",
                f"- **Equipment cocycle:** {witness.equipment_ratio}",
                "",
            ])
        if report.row_mismatch:
            mismatch = report.row_mismatch
            report_lines.extend([
                f"## Row Mismatch at ({mismatch.level},{mismatch.vertex})",
                "",
                "| predecessor | induced | expected |",
                "|---|---|---|",
            ])
            for key in sorted(set(mismatch.induced) | set(mismatch.expected)):
                induced = mismatch.induced.get(key, 0)
                expected = mismatch.expected.get(key, 0)
                report_lines.append(f"| {key} | {induced} | {expected} |")
            report_lines.append("")
        return report_lines

    def _limit(self, report: LimitReport) -> List[str]:
        report_lines = [
            "# Boundary Limit Estimate",
            "",
            f"**Event:** `{report.event}`",
            f"**Last value:** {float(report.last_value):.12g}",
            f"**Stable (delta < {report.tolerance:g}):** {'yes' if report.stable else 'no'}",
            "",
        ]
        if report.target is not None:
            report_lines.extend([
                f"- **Target:** {report.target}",
                f"- **Gap:** {report.target_gap:.3e}",
                "",
            ])
        report_lines.extend(["| N | terminal | value | delta |", "|---|---|---|---|"])
        for point in report.points[-self.max_rows:]:
            delta = "" if point.delta is None else f"{point.delta:.3e}"
            report_lines.append(f"| {point.level} | {point.terminal} | {float(point.value):.12g} | {delta} |")
        report_lines.append("")
        return report_lines

    def _ergodicity(self, report: ErgodicityReport) -> List[str]:
        report_lines = [
            "# Ergodicity Test",
            "",
            f"**Verdict:** {report.verdict}",
            f"**Samples:** {report.samples} (seed {report.seed})",
            f"**Threshold:** {report.threshold:g}",
            "",
        ]
        if report.floor is not None:
            report_lines.extend([f"- **Variance floor:** {report.floor:.3e} ± {report.floor_stderr:.1e}", ""])
        report_lines.extend(["| n | mean | variance | stderr |", "|---|---|---|---|"])
        for row in report.rows:
            report_lines.append(f"| {row.level} | {row.mean:.6g} | {row.variance:.6g} | {row.stderr:.2e} |")
        report_lines.append("")
        return report_lines

    def _exchangeability(self, report: ExchangeabilityReport) -> List[str]:
        report_lines = [
            "# Exchangeability",
            "",
            f"**Result:** {self._verdict(report.passed)}",
            f"**Level:** {report.level}",
            f"**Paths checked:** {report.paths_checked}",
            "",
        ]
        if report.witness:
            witness = report.witness
            report_lines.extend([
                "## Witness",
                "",
                f"- `{witness.p.label()}`: {witness.p_prob}",
                f"- `{witness.q.label()}`: {witness.q_prob}",
                "",
            ])
        return report_lines

    def _frequencies(self, report: FrequencyEstimate) -> List[str]:
        report_lines = [
            "# Thoma Frequencies",
            "",
            f"**n:** {report.n}, **samples:** {report.samples}",
            "",
            "| i | row frequency | stderr | column frequency | stderr |",
            "|---|---|---|---|---|",
        ]
        for row, column in zip(report.rows, report.columns):
            report_lines.append(
                f"| {row.index} | {row.frequency:.6f} | {row.stderr:.2e} | {column.frequency:.6f} | {column.stderr:.2e} |"
            )
        report_lines.append("")
        return report_lines

    def _generic(self, report: BaseModel) -> List[str]:
        report_lines = [f"# {type(report).__name__}", "", "```json"]
        report_lines.append(report.model_dump_json(by_alias=True, indent=2))
        report_lines.extend(["```", ""])
        return report_lines
