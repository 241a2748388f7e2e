"""
`harness` package runs the model: synthetic data, dataset files, training,
evaluation, drift monitoring and the attention benchmark.
"""
