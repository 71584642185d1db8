'''
Package contains regression tests for rnls
'''
