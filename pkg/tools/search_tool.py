"""
Search Tool
Exact-key lookup over the knowledge base; a hit also returns one distractor triple
"""

from typing import Dict, Any, List, TYPE_CHECKING

from .base_tool import BaseTool

if TYPE_CHECKING:
    from environment.knowledge_base import KnowledgeBase


class SearchTool(BaseTool):
    """Looks up (entity, relation) in a KnowledgeBase"""

    def __init__(self, kb: 'KnowledgeBase', config: Dict[str, Any] = None):
        super().__init__(
            tool_name='search',
            description='Return the value stored for an (entity, relation) key',
            config=config
        )
        self.kb = kb

    def required_parameters(self) -> List[str]:
        return ['entity']

    def execute(self, **kwargs) -> Dict[str, Any]:
        missing = self.missing_parameters(kwargs)
        if missing:
            return {'success': False, 'error': f"Missing parameters: {missing}"}

        entity = kwargs['entity']
        relation = kwargs.get('relation')
        value = self.kb.lookup(entity, relation)
        if value is None:
            return {'success': True, 'result': {'hit': False, 'value': None, 'distractor': None}}

        return {
            'success': True,
            'result': {
                'hit': True,
                'value': value,
                'distractor': self.kb.distractor_for(entity, relation),
            }
        }
