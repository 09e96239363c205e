"""
メインエントリーポイント
python -m diffinfo でCLIを起動
"""

import sys

from diffinfo.cli import main

if __name__ == "__main__":
    sys.exit(main())
