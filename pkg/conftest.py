import os
import sys

# Run from the project root like run_coevolution.py does
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
