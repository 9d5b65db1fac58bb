"""Default prompt templates for decomposition, critique, and grounded QA."""

from __future__ import annotations

from .base import PromptTemplate

DECOMPOSE_TEMPLATE = PromptTemplate(
    name="outline-decompose",
    required=("input",),
    text=(
        "You are a document structure analyst. The document below has been split\n"
        "into numbered units, one per line, formatted as \"[id] text\".\n"
        "\n"
        "Produce the document's heading outline, top-down. Output one line per\n"
        "heading in exactly this format:\n"
        "\n"
        "    ## [id_start--id_end] title\n"
        "\n"
        "Rules:\n"
        "- The number of '#' characters is the heading depth (1-6).\n"
        "- [id_start--id_end] is the closed range of unit ids the heading covers.\n"
        "- Use only unit ids that appear in the input; never invent ids.\n"
        "- Keep titles short; do not copy body text and do not summarize bodies.\n"
        "- Output only outline lines, nothing else.\n"
        "\n"
        "Units:\n"
        "{input}\n"
    ),
)

QA_TEMPLATE = PromptTemplate(
    name="grounded-qa",
    required=("query", "context"),
    text=(
        "You are a rigorous retrieval QA assistant. Answer only from the context\n"
        "below; do not use outside knowledge and do not fabricate.\n"
        "\n"
        "Question:\n"
        "{query}\n"
        "\n"
        "Context (each block is prefixed with its unit id):\n"
        "{context}\n"
        "\n"
        "Provide a direct answer followed by a short explanation, and cite the\n"
        "unit ids you used in square brackets, e.g. [12, 15]. If the context is\n"
        "insufficient, state that explicitly.\n"
    ),
)
