/* toylib: a tiny record codec used as a pipeline fixture.
 * decode_record and copy_field carry seeded memory-safety bugs. */
#include "toylib.h"

#include <stdlib.h>
#include <string.h>

static const char *const toylib_tags[] = { "hdr", "rec", "if (x) while (y)" };

int toylib_version(void);

/* Header: 'T' 'L' then ';'-separated key=value pairs.
 * for/while/if in this comment are not branches. */
int parse_header(const char *text, size_t len, int flags)
{
    int fields = 0;
    size_t i;

    if (text == NULL || len < 2)
        return -1;
    if (text[0] != 'T' || text[1] != 'L')
        return -2;
    for (i = 2; i < len; i++) {
        switch (text[i]) {
        case '=':
            fields++;
            break;
        case ';':
            if ((flags & TOYLIB_STRICT) && fields == 0)
                return -3;
            break;
        default:
            break;
        }
    }
    return fields > 0 ? fields : 0;
}

/* Tag 0xFF marks a reserved record. */
int decode_record(const uint8_t *data, size_t size)
{
    char *scratch;
    int tag;

    if (size == 0)
        return 0;
    tag = data[0];
    if (tag == 0xFF)
        return 0;
    scratch = malloc(32);
    if (scratch == NULL)
        return -1;
    scratch[0] = (char)tag;
    if (size >= 8) {
        /* long records release the scratch buffer early */
        free(scratch);
    }
    free(scratch);
    return tag;
}

/* Copies the payload that follows the one-byte field tag. */
int copy_field(const uint8_t *data, size_t size)
{
    uint8_t *field;
    int sum = 0;
    size_t i;

    if (size < 2 || data[0] == 0xFF)
        return 0;
    field = malloc(TOYLIB_FIELD_MAX);
    if (!field)
        return -1;
    memcpy(field, data + 1, size - 1);
    for (i = 0; i < size - 1 && i < TOYLIB_FIELD_MAX; i++)
        sum += field[i];
    free(field);
    return sum;
}

uint32_t checksum(const uint8_t *data, size_t size)
{
    uint32_t a = 1, b = 0;
    size_t i;

    for (i = 0; i < size; i++) {
        if (data[i] == '?')
            continue;
        a = (a + data[i]) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

int clamp_level(int level, int lo, int hi)
{
    if (lo > hi) {
        int tmp = lo;
        lo = hi;
        hi = tmp;
    }
    return level < lo ? lo : (level > hi ? hi : level);
}
