"""
diffinfo: 行列ペンシルによる2つのクラスの差分情報と、それを使った分類・パターン変換
"""

__version__ = "1.0.0"
