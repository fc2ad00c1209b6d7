#include <stddef.h>
#include <stdint.h>

#include "toylib.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)
{
    parse_header((const char *)data, size, TOYLIB_STRICT)
    return 0;
}
