"""Neural encoder companion: invariant texts in, unit vectors out."""

import transformers

transformers.logging.set_verbosity_error()
transformers.logging.disable_progress_bar()

__version__ = "0.1.0"
