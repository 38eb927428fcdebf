# --- PDF Generation: Verdict Report ----------------------------------------
from datetime import datetime, timezone

from fpdf import FPDF

import config
from .utils import sanitize_text_for_pdf, validate_report_inputs

# fixed so that repeated runs produce the same document
CREATION_DATE = datetime(2000, 1, 1, tzinfo=timezone.utc)


def create_verdict_report_pdf(title: str, params: dict, lines: list[str]) -> bytes:
    """Render a one-section verdict report: title, parameter table, verdict lines."""

    is_valid, error_msg = validate_report_inputs(title, params, lines)
    if not is_valid:
        raise ValueError(f"PDF input validation failed: {error_msg}")

    try:
        pdf = FPDF()
        pdf.set_creation_date(CREATION_DATE)
        pdf.add_page()
        pdf.set_margins(12, 12, 12)
        pdf.set_auto_page_break(auto=True, margin=12)
        usable = pdf.epw

        pdf.set_font("Helvetica", "B", 16)
        pdf.set_x(pdf.l_margin)
        pdf.cell(usable, 10, sanitize_text_for_pdf(title), new_x="LMARGIN", new_y="NEXT", align="C")
        pdf.set_font("Helvetica", "I", 10)
        pdf.cell(usable, 6, f"version {config.VERSION}", new_x="LMARGIN", new_y="NEXT", align="C")
        pdf.ln(5)

        # Parameter table
        pdf.set_font("Helvetica", "B", 11)
        pdf.cell(usable, 6, "PARAMETERS:", new_x="LMARGIN", new_y="NEXT")
        pdf.ln(1)
        key_w = usable * 0.3
        for key, value in sorted(params.items()):
            pdf.set_font("Helvetica", "B", 9)
            pdf.cell(key_w, 5, sanitize_text_for_pdf(str(key)), border=1)
            pdf.set_font("Helvetica", "", 9)
            pdf.multi_cell(usable - key_w, 5, sanitize_text_for_pdf(str(value)), border=1,
                           new_x="LMARGIN", new_y="NEXT")
        pdf.ln(5)

        pdf.set_font("Helvetica", "B", 11)
        pdf.cell(usable, 6, "VERDICT:", new_x="LMARGIN", new_y="NEXT")
        pdf.ln(1)
        pdf.set_font("Helvetica", "", 10)
        for line in lines:
            if not line.strip():
                pdf.ln(3)
                continue
            pdf.set_x(pdf.l_margin)
            pdf.multi_cell(usable, 5, sanitize_text_for_pdf(line), new_x="LMARGIN", new_y="NEXT")

        pdf.ln(8)
        pdf.set_font("Helvetica", "I", 9)
        pdf.set_text_color(100, 100, 100)
        pdf.multi_cell(
            usable,
            5,
            "Note: verdicts are numerical evidence at the stated truncations, not proofs.",
            align="C",
        )
        pdf.set_text_color(0, 0, 0)

        return bytes(pdf.output())

    except Exception as e:
        error_type = type(e).__name__
        raise RuntimeError(f"PDF report generation error ({error_type}): {str(e)}")
