"""qrnglab: generate quantum-RNG bitstreams on a simulated star-topology
QPU and grade them with the standard statistical batteries.

Subpackages/modules:

* ``qcore``    - statevector simulator, gates, topology, calibration
* ``families`` - C1-C5 circuit construction and native transpilation
* ``simnoise`` - noisy shot execution and exact outcome distributions
* ``bits``     - extraction policies and bit-exact serialization
* ``sts22``    - SP 800-22 battery (15 families, 188 subtests) + aggregation
* ``ent90b``   - SP 800-90B non-IID min-entropy estimators
* ``biasfit``  - readout-bias model, chi-square fits, summary tables
* ``harness``  - experiment config, backends, manifests, reports
* ``service``  - HTTP wire service exposing the execution backend
"""

__version__ = "0.1.0"

from . import bits, families, qcore, simnoise  # noqa: F401
