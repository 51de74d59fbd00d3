import sys

from blinding_qkd.main import main

sys.exit(main())
