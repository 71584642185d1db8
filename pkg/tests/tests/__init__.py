'''
Package contains unit, regression and acceptance tests for rnls
'''
