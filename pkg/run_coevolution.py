#!/usr/bin/env python3
"""
Co-evolution Startup Script
Main entry point for training, evaluation and export
"""

import sys
import os

# Add project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli.commands import main as cli_main


def print_banner():
    """Print startup banner"""
    print("=" * 60)
    print("Instruction-Policy Co-evolution")
    print("Search-agent training with an evolving instruction population")
    print("=" * 60)
    print()


def main():
    """Main entry point"""
    argv = sys.argv[1:]
    if '--quiet' in argv:
        argv.remove('--quiet')
    else:
        print_banner()

    try:
        sys.exit(cli_main(argv))
    except KeyboardInterrupt:
        print("\n\nRun stopped by user")
        sys.exit(1)


if __name__ == '__main__':
    main()
