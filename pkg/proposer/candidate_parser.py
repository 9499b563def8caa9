"""
Candidate parser
Extracts <ins_k>...</ins_k> candidates from an optimizer response
"""

import logging
import re
from typing import Dict, List

from core.errors import CandidateParseError

logger = logging.getLogger(__name__)

_CANDIDATE = re.compile(r'<ins_(\d+)>(.*?)</ins_\1>', re.DOTALL)


def parse_candidates(raw_response: str) -> List[str]:
    """
    Candidate texts in index order

    Only spans with both an opening and a matching closing tag count; index 0 (the
    parent slot), empty bodies and repeated indices are skipped with a warning.

    Raises:
        CandidateParseError: No well-formed candidate was found
    """
    found: Dict[int, str] = {}
    for match in _CANDIDATE.finditer(raw_response or ''):
        index = int(match.group(1))
        text = match.group(2).strip()
        if index < 1:
            logger.warning(f"Skipping candidate with reserved index {index}")
            continue
        if not text:
            logger.warning(f"Skipping empty candidate <ins_{index}>")
            continue
        if index in found:
            logger.warning(f"Skipping duplicate candidate index {index}")
            continue
        found[index] = text

    if not found:
        raise CandidateParseError("Generator response holds no well-formed <ins_k> candidate")
    return [found[i] for i in sorted(found)]
