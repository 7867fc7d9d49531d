## @file __init__.py
## @brief Distributed interval observers over directed communication graphs.
