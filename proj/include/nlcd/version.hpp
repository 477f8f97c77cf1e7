#pragma once

#define NLCD_VERSION "0.1.0"
