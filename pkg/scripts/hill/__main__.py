# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import sys

from hill import cli

sys.exit(cli.run())
