#include <stdlib.h>

int main(void)
{
    volatile char *p = malloc(16);
    free((void *)p);
    return p[3];
}
