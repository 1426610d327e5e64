# Standard library imports
import logging
from pathlib import Path
from typing import Sequence, Union

# Third-party imports
from reportlab.lib.pagesizes import A4
from reportlab.lib.units import cm
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.platypus import Paragraph, SimpleDocTemplate, Image, Spacer
from xml.sax.saxutils import escape

# Local
from src.approximation.approximator import ApproximationCertificate

logger = logging.getLogger(__name__)


def certificate_paragraphs(certificate: ApproximationCertificate) -> list:
    """Certificate fields as short text paragraphs, in reading order."""
    status = "CERTIFIED" if certificate.success else "NOT CERTIFIED (knot budget exhausted)"
    return [
        f"Target: {certificate.target_label}",
        f"Status: {status}",
        f"Tolerance: {certificate.tolerance!r}. Measured weighted error: "
        f"{certificate.measured_error!r}, attained at {certificate.witness}.",
        f"Grid oracle resolution n = {certificate.oracle_resolution} "
        f"({2 * certificate.oracle_resolution + 1} points on the compactified line).",
        f"Asymptotic slopes: alpha+ = {certificate.alpha_plus!r}, alpha- = {certificate.alpha_minus!r}.",
        f"Radius R = {certificate.radius!r}; tail error outside [-R, R] = {certificate.tail_error!r}.",
        f"Network: {len(certificate.network)} ReLU units from {certificate.knot_count} knots "
        f"after {certificate.iterations} bisections.",
    ]


def build_pdf_report(
        output_file: Union[str, Path],
        certificate: ApproximationCertificate,
        image_paths: Sequence[Union[str, Path]] = (),
        title: str = "Approximation Certificate",
    ) -> Path:
    """
    Lay out a certificate: title, one justified paragraph per field, the charts
    scaled to fit, and a footer naming the target on every page.

    Args:
        output_file (str | Path): PDF path; its folder is created if missing.
        certificate (ApproximationCertificate): Result of `approximate`.
        image_paths (Sequence[Path]): PNG files to include, in order.
        title (str, optional): Title at the top of the first page.

    Returns:
        Path: The written PDF.
    """
    output_file = Path(output_file)
    output_file.parent.mkdir(parents=True, exist_ok=True)

    doc = SimpleDocTemplate(  # A4, 2 cm margins
        str(output_file),
        pagesize=A4,
        rightMargin=2*cm, leftMargin=2*cm,
        topMargin=2*cm, bottomMargin=2*cm
    )

    styles = getSampleStyleSheet()
    styles.add(ParagraphStyle(name="TitleStyle", fontSize=18, leading=22, spaceAfter=1*cm))
    styles.add(ParagraphStyle(name="Justify", parent=styles["Normal"], alignment=4))  # justify

    story = [Paragraph(escape(title), styles["TitleStyle"]), Spacer(1, 1*cm)]
    for paragraph in certificate_paragraphs(certificate):
        story.append(Paragraph(escape(paragraph), styles["Justify"]))
        story.append(Spacer(1, 0.3*cm))
    story += chart_flowables(image_paths, A4[0] - 4*cm, A4[1] - 6*cm)

    footer = certificate_footer(certificate)
    doc.build(story, onFirstPage=footer, onLaterPages=footer)
    logger.info("certificate PDF written to %s", output_file)
    return output_file


def chart_flowables(image_paths: Sequence[Union[str, Path]], frame_width: float,
                    frame_height: float) -> list:
    """Charts scaled down (never up) to share the frame height evenly."""
    if not image_paths:
        return []
    slot_height = frame_height / len(image_paths)
    flowables = []
    for path in image_paths:
        img = Image(str(path))
        scale = min(1.0, frame_width / img.imageWidth, slot_height / img.imageHeight)
        img.drawWidth, img.drawHeight = img.imageWidth * scale, img.imageHeight * scale
        flowables += [img, Spacer(1, 0.5*cm)]
    return flowables


def certificate_footer(certificate: ApproximationCertificate):
    """Page callback: target label and status on the left, page number on the right."""
    status = "certified" if certificate.success else "not certified"
    left = f"{certificate.target_label}  |  tol {certificate.tolerance:.3g}  |  {status}"

    def draw(canvas, doc):
        canvas.saveState()
        canvas.setFont("Helvetica", 9)
        canvas.drawString(2*cm, 1*cm, left)
        canvas.drawRightString(A4[0] - 2*cm, 1*cm, f"Page {canvas.getPageNumber()}")
        canvas.restoreState()

    return draw
