"""
同梱のサンプルプラグイン。
"""
