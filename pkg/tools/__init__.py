from .base_tool import BaseTool
from .search_tool import SearchTool
