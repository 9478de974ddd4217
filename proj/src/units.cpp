#include "wqed/units.hpp"
