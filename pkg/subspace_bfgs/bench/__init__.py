"""基准测试模块"""
