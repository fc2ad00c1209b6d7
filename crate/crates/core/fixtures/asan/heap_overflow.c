#include <stdlib.h>
#include <string.h>

int main(int argc, char **argv)
{
    char *p = malloc(8);
    (void)argv;
    memset(p, 'A', 8 + argc * 8);
    free(p);
    return 0;
}
